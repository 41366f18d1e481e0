// End-to-end tests of the hesn binary: subcommands, exit codes, artifact
// determinism. The binary path comes in through HESN_BIN.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "esn/common.hpp"
#include "esn/features.hpp"
#include "esn/wav.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout only; stderr goes to the log file
};

CliResult run_cli(const std::string& args, const fs::path& dir)
{
    const std::string command = std::string(HESN_BIN) + " " + args + " 2>"
                                + (dir / "stderr.log").string();
    CliResult result;
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buffer;
    while (std::size_t got = fread(buffer.data(), 1, buffer.size(), pipe))
        result.output.append(buffer.data(), got);
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / "esn_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

/// Tiny corpus: per-utterance tones with speaker-dependent harmonics, plus
/// frame labels derived from the waveform position.
void make_toy_corpus(const fs::path& dir, int n_utterances, double seconds = 0.6)
{
    const int rate = 22500;
    const long n = static_cast<long>(seconds * rate);
    esn::dsp::FrameSpec spec;
    const int frame_len = spec.frame_length(rate);
    const int hop = spec.hop_length(rate);
    const long frames = (n - frame_len) / hop + 1;

    std::string manifest;
    for (int u = 0; u < n_utterances; ++u) {
        esn::dsp::AudioSignal signal;
        signal.sample_rate = rate;
        signal.samples.resize(n);
        for (long i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / rate;
            signal.samples[i] = 0.4 * std::sin(2.0 * std::numbers::pi * (200.0 + 90.0 * u) * t)
                                + 0.2 * std::sin(2.0 * std::numbers::pi * (700.0 + 50.0 * u) * t);
        }
        const std::string id = "utt" + std::to_string(u);
        esn::dsp::write_wav16(dir / (id + ".wav"), signal);
        std::vector<int> labels(frames);
        for (long f = 0; f < frames; ++f) labels[f] = (u + (f / 25)) % 3;
        esn::dsp::write_labels(dir / (id + ".lab"), labels);
        manifest += id + "\t" + id + ".wav\t" + id + ".lab\tspk" + std::to_string(u) + "\n";
    }
    std::ofstream out(dir / "audio.tsv");
    out << manifest;
}

void write_config(const fs::path& path, const std::string& text)
{
    std::ofstream out(path);
    out << text;
}

const std::string kToyConfig = "model.variant = shallow\n"
                               "layer.size = 40\n"
                               "layer.rho = 0.3\n"
                               "layer.leak = 0.5\n"
                               "context.width = 5\n"
                               "classes.count = 3\n"
                               "ridge.gamma = 1e-6\n"
                               "trial.n_seeds = 2\n"
                               "trial.master_seed = 9\n";

}  // namespace

TEST_CASE("extract, train, eval: happy path and byte determinism")
{
    const auto dir = fresh_dir("happy");
    make_toy_corpus(dir, 3);
    write_config(dir / "exp.conf", kToyConfig);

    // Extract from a manifest of WAVs.
    const auto feat_dir = dir / "features";
    auto extract = run_cli("extract --in " + (dir / "audio.tsv").string() + " --out "
                               + feat_dir.string() + " --config " + (dir / "exp.conf").string(),
                           dir);
    CHECK(extract.exit_code == 0);
    CHECK(extract.output.find("extracted=3 failed=0") != std::string::npos);
    CHECK(fs::exists(feat_dir / "utt0.feat"));
    CHECK(fs::exists(feat_dir / "manifest.tsv"));

    // Re-running overwrites with byte-identical artifacts.
    const std::string feat_bytes = read_file(feat_dir / "utt1.feat");
    const std::string manifest_bytes = read_file(feat_dir / "manifest.tsv");
    auto again = run_cli("extract --in " + (dir / "audio.tsv").string() + " --out "
                             + feat_dir.string() + " --config " + (dir / "exp.conf").string(),
                         dir);
    CHECK(again.exit_code == 0);
    CHECK(read_file(feat_dir / "utt1.feat") == feat_bytes);
    CHECK(read_file(feat_dir / "manifest.tsv") == manifest_bytes);

    // Train on every utterance (no split assignments).
    const auto model_path = dir / "model.esnm";
    auto train = run_cli("train --manifest " + (feat_dir / "manifest.tsv").string() + " --config "
                             + (dir / "exp.conf").string() + " --out " + model_path.string(),
                         dir);
    CHECK(train.exit_code == 0);
    CHECK(train.output.find("mean_frame_rate=") != std::string::npos);
    CHECK(fs::exists(model_path));

    // Deterministic retrain.
    const std::string model_bytes = read_file(model_path);
    run_cli("train --manifest " + (feat_dir / "manifest.tsv").string() + " --config "
                + (dir / "exp.conf").string() + " --out " + (dir / "model2.esnm").string(),
            dir);
    CHECK(read_file(dir / "model2.esnm") == model_bytes);

    // Evaluate; the test split is empty so unassigned entries stand in.
    auto eval = run_cli("eval --manifest " + (feat_dir / "manifest.tsv").string() + " --model "
                            + model_path.string() + " --config " + (dir / "exp.conf").string()
                            + " --out " + (dir / "eval.csv").string(),
                        dir);
    CHECK(eval.exit_code == 0);
    CHECK(eval.output.find("mean_frame_rate=") != std::string::npos);
    const std::string eval_bytes = read_file(dir / "eval.csv");
    CHECK(eval_bytes.find("model,split,frames,correct,rate") == 0);

    run_cli("eval --manifest " + (feat_dir / "manifest.tsv").string() + " --model "
                + model_path.string() + " --config " + (dir / "exp.conf").string() + " --out "
                + (dir / "eval2.csv").string(),
            dir);
    CHECK(read_file(dir / "eval2.csv") == eval_bytes);

    // Inspect prints the key facts and can export the readout.
    auto inspect = run_cli("inspect --model " + model_path.string() + " --out "
                               + (dir / "readout.csv").string(),
                           dir);
    CHECK(inspect.exit_code == 0);
    CHECK(inspect.output.find("variant: shallow") != std::string::npos);
    CHECK(inspect.output.find("classes: 3") != std::string::npos);
    CHECK(fs::exists(dir / "readout.csv"));
}

TEST_CASE("extract reports per-file failures and exits nonzero")
{
    const auto dir = fresh_dir("corrupt");
    make_toy_corpus(dir, 3);
    // Truncate one WAV into garbage.
    std::ofstream bad(dir / "utt1.wav", std::ios::binary | std::ios::trunc);
    bad << "RIFF";
    bad.close();

    const auto feat_dir = dir / "features";
    auto extract = run_cli("extract --in " + (dir / "audio.tsv").string() + " --out "
                               + feat_dir.string(),
                           dir);
    CHECK(extract.exit_code == 1);
    CHECK(extract.output.find("extracted=2 failed=1") != std::string::npos);
    CHECK(fs::exists(feat_dir / "utt0.feat"));
    CHECK(fs::exists(feat_dir / "utt2.feat"));
    CHECK(!fs::exists(feat_dir / "utt1.feat"));
    // The failed file is named on stderr.
    const std::string log = read_file(dir / "stderr.log");
    CHECK(log.find("utt1.wav") != std::string::npos);
}

TEST_CASE("extract scans a directory when given one")
{
    const auto dir = fresh_dir("scan");
    make_toy_corpus(dir, 2);
    const auto feat_dir = dir / "features";
    auto extract = run_cli("extract --in " + dir.string() + " --out " + feat_dir.string(), dir);
    CHECK(extract.exit_code == 0);
    CHECK(fs::exists(feat_dir / "utt0.feat"));
    CHECK(fs::exists(feat_dir / "utt1.feat"));
}

TEST_CASE("grid sweeps the config axes and writes the CSV")
{
    const auto dir = fresh_dir("grid");
    make_toy_corpus(dir, 4);
    const auto feat_dir = dir / "features";
    REQUIRE(run_cli("extract --in " + (dir / "audio.tsv").string() + " --out "
                        + feat_dir.string(),
                    dir)
                .exit_code
            == 0);

    // Assign splits in the feature manifest: 2 train, 1 validation, 1 test.
    const std::vector<std::string> splits = {"train", "train", "validation", "test"};
    std::ifstream in(feat_dir / "manifest.tsv");
    std::string line, rebuilt;
    int idx = 0;
    while (std::getline(in, line)) rebuilt += line + "\t" + splits[idx++] + "\n";
    in.close();
    std::ofstream out(feat_dir / "manifest.tsv");
    out << rebuilt;
    out.close();

    write_config(dir / "grid.conf", kToyConfig + "grid.layer.size = [10, 20, 30]\n"
                                                 "grid.layer.rho = [0.3, 0.9]\n");
    auto grid = run_cli("grid --manifest " + (feat_dir / "manifest.tsv").string() + " --config "
                            + (dir / "grid.conf").string() + " --out " + (dir / "grid.csv").string()
                            + " --jobs 2",
                        dir);
    CHECK(grid.exit_code == 0);
    CHECK(grid.output.find("best_config:") != std::string::npos);
    CHECK(grid.output.find("mean_frame_rate=") != std::string::npos);

    std::ifstream csv(dir / "grid.csv");
    std::vector<std::string> rows;
    while (std::getline(csv, line)) rows.push_back(line);
    REQUIRE(rows.size() == 7);  // header + 3 x 2 points
    CHECK(rows[0] == "layer.size,layer.rho,seed0,seed1,mean,std,train_seconds,n_params,status");

    // Train then eval against the split manifest: one-row CSV.
    auto train = run_cli("train --manifest " + (feat_dir / "manifest.tsv").string() + " --config "
                             + (dir / "grid.conf").string() + " --out "
                             + (dir / "model.esnm").string(),
                         dir);
    CHECK(train.exit_code == 0);
    auto eval = run_cli("eval --manifest " + (feat_dir / "manifest.tsv").string() + " --model "
                            + (dir / "model.esnm").string() + " --config "
                            + (dir / "grid.conf").string() + " --split test --out "
                            + (dir / "eval.csv").string(),
                        dir);
    CHECK(eval.exit_code == 0);
    std::ifstream ecsv(dir / "eval.csv");
    rows.clear();
    while (std::getline(ecsv, line)) rows.push_back(line);
    CHECK(rows.size() == 2);
}

TEST_CASE("exit codes: validation failures exit 2, runtime failures exit 1")
{
    const auto dir = fresh_dir("codes");
    make_toy_corpus(dir, 2);
    const auto feat_dir = dir / "features";
    REQUIRE(run_cli("extract --in " + (dir / "audio.tsv").string() + " --out "
                        + feat_dir.string(),
                    dir)
                .exit_code
            == 0);
    write_config(dir / "exp.conf", kToyConfig);
    REQUIRE(run_cli("train --manifest " + (feat_dir / "manifest.tsv").string() + " --config "
                        + (dir / "exp.conf").string() + " --out " + (dir / "model.esnm").string(),
                    dir)
                .exit_code
            == 0);

    // Unknown flag.
    CHECK(run_cli("train --manifest x --frobnicate", dir).exit_code == 2);
    // Unknown subcommand.
    CHECK(run_cli("transmogrify", dir).exit_code == 2);
    // Bad config value.
    write_config(dir / "bad.conf", "layer.size = banana\n");
    CHECK(run_cli("train --manifest " + (feat_dir / "manifest.tsv").string() + " --config "
                      + (dir / "bad.conf").string() + " --out " + (dir / "m.esnm").string(),
                  dir)
              .exit_code
          == 2);
    // Unknown config key.
    write_config(dir / "typo.conf", "layer.sze = 10\n");
    CHECK(run_cli("train --manifest " + (feat_dir / "manifest.tsv").string() + " --config "
                      + (dir / "typo.conf").string() + " --out " + (dir / "m.esnm").string(),
                  dir)
              .exit_code
          == 2);
    // Missing config file: an io failure, not a validation one.
    CHECK(run_cli("train --manifest " + (feat_dir / "manifest.tsv").string()
                      + " --config /nonexistent.conf --out " + (dir / "m.esnm").string(),
                  dir)
              .exit_code
          == 1);
    // Missing manifest.
    CHECK(run_cli("train --manifest /nonexistent.tsv --config " + (dir / "exp.conf").string()
                      + " --out " + (dir / "m.esnm").string(),
                  dir)
              .exit_code
          == 1);

    // Dimension mismatch between model and features: validation, exit 2
    // with a shape message.
    const auto other_dir = dir / "features6";
    REQUIRE(run_cli("extract --in " + (dir / "audio.tsv").string() + " --out "
                        + other_dir.string() + " --set features.n_filters=6",
                    dir)
                .exit_code
            == 0);
    auto mismatch = run_cli("eval --manifest " + (other_dir / "manifest.tsv").string()
                                + " --model " + (dir / "model.esnm").string() + " --config "
                                + (dir / "exp.conf").string(),
                            dir);
    CHECK(mismatch.exit_code == 2);
    CHECK(read_file(dir / "stderr.log").find("dimension") != std::string::npos);
}

TEST_CASE("bench subcommands print their summary lines")
{
    const auto dir = fresh_dir("bench");
    write_config(dir / "mc.conf", "model.variant = shallow\n"
                                  "layer.size = 50\n"
                                  "layer.rho = 0.9\n"
                                  "layer.leak = 0.5\n"
                                  "layer.input_scale = 0.5\n"
                                  "trial.n_seeds = 2\n"
                                  "trial.master_seed = 3\n"
                                  "bench.mc.length = 1200\n"
                                  "bench.mc.max_lag = 8\n");
    auto mc = run_cli("bench-mc --config " + (dir / "mc.conf").string() + " --out "
                          + (dir / "mc.csv").string(),
                      dir);
    CHECK(mc.exit_code == 0);
    CHECK(mc.output.find("total_mc=") != std::string::npos);
    std::ifstream csv(dir / "mc.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "lag,score");

    auto cmp = run_cli("bench-mc --config " + (dir / "mc.conf").string()
                           + " --set bench.mc.compare_delays=[0,2,4] --out "
                           + (dir / "cmp.csv").string(),
                       dir);
    CHECK(cmp.exit_code == 0);
    CHECK(cmp.output.find("hetero_wins=") != std::string::npos);
    CHECK(fs::exists(dir / "cmp.csv"));

    write_config(dir / "synth.conf", "model.variant = shallow\n"
                                     "layer.size = 60\n"
                                     "context.width = 5\n"
                                     "ridge.gamma = 1e-6\n"
                                     "trial.n_seeds = 1\n"
                                     "bench.synth.classes = 3\n"
                                     "bench.synth.train_per_class = 200\n"
                                     "bench.synth.test_per_class = 60\n");
    auto synth = run_cli("bench-synth --config " + (dir / "synth.conf").string() + " --out "
                             + (dir / "synth.csv").string(),
                         dir);
    CHECK(synth.exit_code == 0);
    CHECK(synth.output.find("mean_frame_rate=") != std::string::npos);
    CHECK(fs::exists(dir / "synth.csv"));
}

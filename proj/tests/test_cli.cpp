#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nonstat/cli.hpp"
#include "nonstat/meta.hpp"
#include "nonstat/sources.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <unistd.h>

using namespace nonstat;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "nonstat");
    std::vector<const char *> argv;
    for (const auto &a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string &text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::vector<std::string> data_lines(const std::string &text) {
    std::vector<std::string> out;
    for (auto &l : lines(text))
        if (!l.empty() && l[0] != '#') out.push_back(l);
    return out;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

// predictor -> mean_cum_regret_bits from eval output
std::map<std::string, double> eval_means(const std::string &text) {
    std::map<std::string, double> out;
    auto rows = data_lines(text);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        auto f = split(rows[i], ',');
        out[f[0]] = std::stod(f[4]);
    }
    return out;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("nonstat_cli_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string &name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"frobnicate"}).code == kExitUsage);
    CHECK(run({"sample", "--prior", "ptw", "--depth", "3", "--bogus"}).code == kExitUsage);
    CHECK(run({"sample", "--prior", "poisson", "--length", "8"}).code == kExitUsage);
    CHECK(run({"sample", "--length", "8"}).code == kExitUsage);

    Run zero = run({"eval", "--prior", "ptw", "--depth", "3", "--num", "5"});
    CHECK(zero.code == kExitUsage);
    CHECK(zero.err.find("predictor") != std::string::npos);
    CHECK(run({"eval", "--prior", "ptw", "--depth", "3", "--predictors", ""}).code == kExitUsage);
    CHECK(run({"eval", "--prior", "ptw", "--depth", "3", "--predictors", "kt,nope"}).code == kExitUsage);

    Run mismatch = run({"sample", "--prior", "ptw", "--depth", "3", "--length", "7"});
    CHECK(mismatch.code == kExitUsage);
    CHECK(mismatch.err.find("2^depth") != std::string::npos);
    CHECK(run({"sample", "--prior", "ptw", "--length", "12"}).code == kExitUsage);
    CHECK(run({"sample", "--prior", "regular", "--length", "8"}).code == kExitUsage);
    CHECK(run({"sample", "--prior", "regular", "--length", "8", "--period", "9"}).code == kExitUsage);
    CHECK(run({"sample", "--prior", "lin"}).code == kExitUsage);
    CHECK(run({"train", "--prior", "ptw", "--depth", "3", "--arch", "gru", "--out", "m.json"}).code == kExitUsage);
    CHECK(run({"train", "--prior", "ptw", "--depth", "3"}).code == kExitUsage);
    CHECK(run({"train", "--prior", "ptw", "--depth", "3", "--batch", "0", "--out", "m.json"}).code == kExitUsage);

    CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("runtime failures exit with 1") {
    CHECK(run({"sample", "--prior", "ptw", "--depth", "2", "--out", "/nonexistent/dir/x.csv"}).code == kExitFailure);
    CHECK(run({"eval", "--prior", "ptw", "--depth", "3", "--predictors", "model:/nonexistent/m.json"}).code ==
          kExitFailure);
    Run overflow = run({"eval", "--prior", "ptw", "--depth", "3", "--num", "3", "--predictors", "ptw:2"});
    CHECK(overflow.code == kExitFailure);
    CHECK(overflow.err.find("sequence 0") != std::string::npos);
}

TEST_CASE("sample") {
    Run r = run({"sample", "--prior", "ptw", "--depth", "3", "--length", "8", "--num", "4", "--seed", "5"});
    REQUIRE(r.code == kExitOk);
    auto all = lines(r.out);
    CHECK(all[0] == "# nonstat sample");
    CHECK(r.out.find("# root_seed=5\n") != std::string::npos);
    CHECK(r.out.find("# prior=ptw:3\n") != std::string::npos);
    auto rows = data_lines(r.out);
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == "seq_id,n,symbols,num_segments,segment_ends,biases");
    for (std::size_t i = 0; i < 4; ++i) {
        SampledSequence s = sample_from_prior(PriorSpec::ptw(3), 5, i);
        std::ostringstream expected;
        write_sequence_csv_row(expected, s);
        CHECK(rows[i + 1] + "\n" == expected.str());
    }
    CHECK(run({"sample", "--prior", "ptw", "--depth", "3", "--num", "4", "--seed", "5"}).out == r.out);

    Run u = run({"sample", "--prior", "uniform", "--length", "20", "--max-len", "3", "--num", "2"});
    REQUIRE(u.code == kExitOk);
    CHECK(u.out.find("# prior=uniform:3\n") != std::string::npos);
    Run reg = run({"sample", "--prior", "regular", "--length", "8", "--period", "4", "--num", "1"});
    REQUIRE(reg.code == kExitOk);
    CHECK(split(data_lines(reg.out)[1], ',')[4] == "4;8");
}

TEST_CASE("stats") {
    TempDir dir;
    Run r = run({"stats", "--depth", "4", "--samples", "2000", "--seed", "1", "--out", dir / "counts.csv"});
    REQUIRE(r.code == kExitOk);
    auto counts = data_lines(slurp(dir / "counts.csv"));
    REQUIRE(counts.size() == 17);
    CHECK(counts[0] == "k,analytic_p,empirical_p,stderr");
    CHECK(split(counts[1], ',')[1] == "0.5");
    auto locs = data_lines(slurp(dir / "counts_locations.csv"));
    REQUIRE(locs.size() == 16);
    CHECK(locs[0] == "t,analytic_loc_p,empirical_loc_p");
    CHECK(split(locs[8], ',')[0] == "8");
    CHECK(split(locs[8], ',')[1] == "0.5");
    CHECK(std::abs(std::stod(split(locs[8], ',')[2]) - 0.5) < 0.05);
    CHECK(slurp(dir / "counts.csv").find("# analytic_mean_switches=2") != std::string::npos);

    Run custom = run({"stats", "--depth", "2", "--samples", "10", "--out", dir / "c2.csv", "--locations-out",
                      dir / "l2.csv"});
    REQUIRE(custom.code == kExitOk);
    CHECK(fs::exists(dir / "l2.csv"));
    CHECK(run({"stats", "--depth", "2", "--samples", "0"}).code == kExitUsage);
}

TEST_CASE("eval") {
    std::vector<std::string> args = {"eval", "--prior", "ptw", "--depth", "5", "--num", "300", "--seed", "3",
                                     "--predictors", "const:0.5,kt,kt_oracle,ptw:5,lin,mix:ptw:5|lin"};
    Run a = run(args), b = run(args);
    REQUIRE(a.code == kExitOk);
    auto rows = data_lines(a.out);
    REQUIRE(rows.size() == 7);
    CHECK(rows[0] == "predictor,prior,length,num_seqs,mean_cum_regret_bits,stderr_bits,wall_ms");
    CHECK(split(rows[1], ',')[0] == "kt_oracle");
    CHECK(split(rows.back(), ',')[0] == "const:0.5");
    CHECK(split(rows[1], ',')[1] == "ptw:5");
    CHECK(split(rows[1], ',')[2] == "32");
    CHECK(split(rows[1], ',')[3] == "300");

    // identical apart from wall time
    auto rb = data_lines(b.out);
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].substr(0, rows[i].rfind(',')) == rb[i].substr(0, rb[i].rfind(',')));
    CHECK(a.out.find("# predictors=const:0.5,kt,kt_oracle,ptw:5,lin,mix:ptw:5|lin\n") != std::string::npos);

    auto threaded = args;
    threaded.insert(threaded.end(), {"--threads", "2"});
    auto rt = data_lines(run(threaded).out);
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].substr(0, rows[i].rfind(',')) == rt[i].substr(0, rt[i].rfind(',')));

    auto realized = args;
    realized.push_back("--realized");
    Run rr = run(realized);
    REQUIRE(rr.code == kExitOk);
    CHECK(rr.out.find("# regret=realized") != std::string::npos);
}

TEST_CASE("trace") {
    TempDir dir;
    Run r = run({"trace", "--prior", "lin", "--length", "16", "--seed", "2", "--seq-id", "3", "--predictors",
                 "kt,lin", "--out", dir / "trace.csv"});
    REQUIRE(r.code == kExitOk);
    std::string text = slurp(dir / "trace.csv");
    CHECK(text.find("# partition={") != std::string::npos);
    auto rows = data_lines(text);
    REQUIRE(rows.size() == 33);
    CHECK(rows[0] == "predictor,seq_id,t,theta,p1,regret_bits,cum_regret_bits");
    auto first = split(rows[1], ',');
    CHECK(first[0] == "kt");
    CHECK(first[1] == "3");
    CHECK(first[2] == "1");
    CHECK(first[4] == "0.5");
    CHECK(split(rows[17], ',')[0] == "lin");
    CHECK(split(rows[32], ',')[2] == "16");
}

TEST_CASE("train then eval") {
    TempDir dir;
    Run t = run({"train", "--prior", "regular", "--length", "32", "--period", "8", "--arch", "lstm", "--hidden",
                 "16", "--readout", "16,16", "--steps", "500", "--batch", "16", "--lr", "0.005", "--seed", "4",
                 "--out", dir / "model.json", "--curve", dir / "curve.csv"});
    REQUIRE(t.code == kExitOk);
    REQUIRE(fs::exists(dir / "model.json"));
    meta::RecurrentModel model = meta::load_model(dir / "model.json");
    CHECK(model.arch().hidden_size == 16);
    CHECK(model.arch().readout_sizes == std::vector<std::size_t>{16, 16});
    REQUIRE(model.training_config.has_value());
    CHECK(model.training_config->prior.label() == "regular:8");
    auto curve = data_lines(slurp(dir / "curve.csv"));
    REQUIRE(curve.size() == 501);
    CHECK(curve[0] == "step,mean_loss_nats");

    Run e = run({"eval", "--prior", "regular", "--length", "32", "--period", "8", "--num", "500", "--seed", "9",
                 "--predictors", "const:0.5,model:" + (dir / "model.json")});
    REQUIRE(e.code == kExitOk);
    auto means = eval_means(e.out);
    CHECK(means.at("model:" + (dir / "model.json")) < means.at("const:0.5"));

    Run again = run({"train", "--prior", "regular", "--length", "32", "--period", "8", "--hidden", "16", "--readout",
                     "16,16", "--steps", "500", "--batch", "16", "--lr", "0.005", "--seed", "4", "--out",
                     dir / "model2.json"});
    REQUIRE(again.code == kExitOk);
    CHECK(slurp(dir / "model.json") == slurp(dir / "model2.json"));
}

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "adamoge/checkpoint.hpp"
#include "adamoge/commands.hpp"
#include "adamoge/data.hpp"

using namespace adamoge;
using namespace adamoge::cli;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "adamoge");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  ::testing::internal::CaptureStdout();
  ::testing::internal::CaptureStderr();
  const int code = run_cli(static_cast<int>(argv.size()), argv.data());
  std::string out = ::testing::internal::GetCapturedStdout();
  std::string err = ::testing::internal::GetCapturedStderr();
  return {code, out, err};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "adamoge_test_cli" /
           ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    data::SinusoidSpec spec;
    spec.rows = 700;
    spec.vars = 2;
    spec.bins = {2.0, 5.0};
    spec.period = 32;
    spec.seed = 3;
    csv_ = (dir_ / "synthetic.csv").string();
    data::write_csv(data::make_sinusoid_table(spec), csv_);
    conf_ = (dir_ / "run.conf").string();
    std::ofstream(conf_) << "data.path = " << csv_ << "\n"
                         << "data.kind = ratio\n"
                         << "data.lookback = 32\n"
                         << "data.horizon = 16\n"
                         << "model.e_max = 3\n"
                         << "model.feature_dim = 4\n"
                         << "train.epochs = 2\n"
                         << "train.base_lr = 0.01\n"
                         << "train.threads = 1\n"
                         << "out.dir = " << (dir_ / "run").string() << "\n";
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
  std::string csv_;
  std::string conf_;
};

nlohmann::json without_seconds(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  j.erase("seconds");
  return j;
}

}  // namespace

TEST_F(Cli, TrainWritesCheckpointAndReports) {
  const auto r = invoke({"train", "--config", conf_});
  ASSERT_EQ(r.code, kOk) << r.err;
  const fs::path run = dir_ / "run";
  EXPECT_TRUE(fs::exists(run / "model.ckpt"));
  EXPECT_TRUE(fs::exists(run / "run.conf"));
  const auto report = nlohmann::ordered_json::parse(slurp(run / "report.json"));
  std::vector<std::string> keys;
  for (auto it = report.begin(); it != report.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"dataset", "horizon", "mse", "mae", "params", "seconds", "fingerprint"}));
  EXPECT_EQ(report["dataset"], "synthetic");
  EXPECT_EQ(report["horizon"], 16);
  EXPECT_GE(report["mse"].get<double>(), 0.0);
  EXPECT_EQ(report["fingerprint"], RunConfig::load(conf_).fingerprint_hex());
  EXPECT_EQ(nlohmann::json::parse(r.out), nlohmann::json::parse(slurp(run / "report.json")));
  const std::string csv = slurp(run / "report.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "dataset,horizon,mse,mae,params,seconds,fingerprint");
  EXPECT_EQ(RunConfig::load((run / "run.conf").string()).fingerprint(), RunConfig::load(conf_).fingerprint());
}

TEST_F(Cli, MissingDatasetNamesPath) {
  const auto r = invoke({"train", "--config", conf_, "--override", "data.path=" + path("absent.csv")});
  EXPECT_EQ(r.code, kDataFailure);
  EXPECT_NE(r.err.find(path("absent.csv")), std::string::npos) << r.err;
}

TEST_F(Cli, ConfigErrorsExitOne) {
  EXPECT_EQ(invoke({"train", "--config", conf_, "--override", "model.experts=3"}).code, kUsage);
  EXPECT_EQ(invoke({"train", "--config", path("nope.conf")}).code, kUsage);
  EXPECT_EQ(invoke({"train", "--config", conf_, "--override", "train.epochs=0"}).code, kUsage);
  EXPECT_EQ(invoke({}).code, kUsage);
  EXPECT_EQ(invoke({"fly"}).code, kUsage);
  EXPECT_EQ(invoke({"predict", "--config", conf_}).code, kUsage);  // --origin is required
}

TEST_F(Cli, SameSeedTwiceGivesIdenticalReports) {
  const auto a = invoke({"train", "--config", conf_, "--override", "train.seed=7", "--out", path("a")});
  const auto b = invoke({"train", "--config", conf_, "--override", "train.seed=7", "--out", path("b")});
  ASSERT_EQ(a.code, kOk);
  ASSERT_EQ(b.code, kOk);
  EXPECT_EQ(without_seconds(slurp(dir_ / "a" / "report.json")), without_seconds(slurp(dir_ / "b" / "report.json")));
  EXPECT_EQ(slurp(dir_ / "a" / "model.ckpt"), slurp(dir_ / "b" / "model.ckpt"));
  const auto c = invoke({"train", "--config", conf_, "--seed", "8", "--out", path("c")});
  EXPECT_NE(without_seconds(slurp(dir_ / "a" / "report.json")), without_seconds(slurp(dir_ / "c" / "report.json")));
}

TEST_F(Cli, EvalAfterTrainMatchesReport) {
  ASSERT_EQ(invoke({"train", "--config", conf_}).code, kOk);
  const auto r = invoke({"eval", "--config", conf_});
  ASSERT_EQ(r.code, kOk) << r.err;
  const auto trained = nlohmann::json::parse(slurp(dir_ / "run" / "report.json"));
  const auto evaluated = nlohmann::json::parse(slurp(dir_ / "run" / "eval.json"));
  EXPECT_EQ(trained["mse"].get<double>(), evaluated["mse"].get<double>());
  EXPECT_EQ(trained["mae"].get<double>(), evaluated["mae"].get<double>());
  EXPECT_EQ(trained["params"], evaluated["params"]);
  EXPECT_EQ(trained["fingerprint"], evaluated["fingerprint"]);
}

TEST_F(Cli, FingerprintMismatch) {
  ASSERT_EQ(invoke({"train", "--config", conf_}).code, kOk);
  const auto horizon = invoke({"eval", "--config", conf_, "--override", "data.horizon=8"});
  EXPECT_EQ(horizon.code, kUsage);
  EXPECT_NE(horizon.err.find("fingerprint"), std::string::npos) << horizon.err;

  const auto lr = invoke({"eval", "--config", conf_, "--override", "train.base_lr=0.5"});
  EXPECT_EQ(lr.code, kUsage);
  const auto allowed = invoke({"eval", "--config", conf_, "--override", "train.base_lr=0.5", "--allow-fingerprint-mismatch"});
  EXPECT_EQ(allowed.code, kOk) << allowed.err;
  EXPECT_NE(allowed.err.find("fingerprint"), std::string::npos);
  // Output locations do not enter the fingerprint.
  EXPECT_EQ(invoke({"eval", "--config", conf_, "--checkpoint", path("run/model.ckpt"), "--out", path("elsewhere")}).code, kOk);
}

TEST_F(Cli, ZeroExpertsScoreTargetPower) {
  ASSERT_EQ(invoke({"train", "--config", conf_}).code, kOk);
  Checkpoint ckpt = read_checkpoint(path("run/model.ckpt"));
  for (auto& e : ckpt.entries)
    if (e.name.find("experts.") != std::string::npos) e.value.fill(0.0);
  write_checkpoint(path("zero.ckpt"), ckpt);
  const auto r = invoke({"eval", "--config", conf_, "--checkpoint", path("zero.ckpt")});
  ASSERT_EQ(r.code, kOk) << r.err;

  // Oracle: mean squared normalized target over every test window.
  const auto raw = data::load_csv(csv_);
  const auto split = data::make_split(raw.rows(), data::DatasetKind::Ratio, 32, 16);
  const auto stats = data::fit_norm(raw, split.train);
  double sq = 0.0;
  std::size_t n = 0;
  for (std::size_t o = split.test.begin; o + 48 <= split.test.end; ++o)
    for (std::size_t h = 0; h < 16; ++h)
      for (std::size_t v = 0; v < 2; ++v, ++n) {
        const double z = (raw.values.at(o + 32 + h, v) - stats.mean[v]) / stats.std[v];
        sq += z * z;
      }
  EXPECT_NEAR(nlohmann::json::parse(r.out)["mse"].get<double>(), sq / static_cast<double>(n), 1e-6);
}

TEST_F(Cli, PredictBoundaries) {
  ASSERT_EQ(invoke({"train", "--config", conf_}).code, kOk);
  const auto ok = invoke({"predict", "--config", conf_, "--origin", "32", "--output", path("f.csv")});
  ASSERT_EQ(ok.code, kOk) << ok.err;
  const auto table = slurp(dir_ / "f.csv");
  std::istringstream in(table);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "part,row,x0,x1");
  std::size_t history = 0, forecast = 0;
  while (std::getline(in, line)) {
    history += line.rfind("history,", 0) == 0;
    forecast += line.rfind("forecast,", 0) == 0;
  }
  EXPECT_EQ(history, 32u);
  EXPECT_EQ(forecast, 16u);
  EXPECT_NE(table.find("\nforecast,32,"), std::string::npos);

  const auto early = invoke({"predict", "--config", conf_, "--origin", "31"});
  EXPECT_EQ(early.code, kDataFailure);
  EXPECT_NE(early.err.find("history"), std::string::npos);
  EXPECT_EQ(invoke({"predict", "--config", conf_, "--origin", "701"}).code, kDataFailure);
  EXPECT_EQ(invoke({"predict", "--config", conf_, "--origin", "700"}).code, kOk);
}

TEST_F(Cli, ConstantSeriesForecastsTheConstant) {
  data::SeriesTable t;
  t.values = Tensor({300, 2});
  for (std::size_t i = 0; i < 300; ++i) {
    t.values.at(i, 0) = 12.5;
    t.values.at(i, 1) = -3.0;
    t.times.push_back(static_cast<std::int64_t>(i));
    t.timestamps.push_back(std::to_string(i));
  }
  t.names = {"a", "b"};
  data::write_csv(t, path("const.csv"));
  ASSERT_EQ(invoke({"train", "--config", conf_, "--override", "data.path=" + path("const.csv")}).code, kOk);
  const auto r = invoke({"predict", "--config", conf_, "--override", "data.path=" + path("const.csv"), "--origin", "100"});
  ASSERT_EQ(r.code, kOk) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::size_t checked = 0;
  while (std::getline(in, line)) {
    if (line.rfind("forecast,", 0) != 0) continue;
    double a = 0, b = 0;
    ASSERT_EQ(std::sscanf(line.c_str(), "forecast,%*d,%lf,%lf", &a, &b), 2);
    EXPECT_NEAR(a, 12.5, 1e-6);
    EXPECT_NEAR(b, -3.0, 1e-6);
    ++checked;
  }
  EXPECT_EQ(checked, 16u);
}

TEST_F(Cli, InspectSpectrumUntrained) {
  // Pure sinusoid at bin 4 of a 32-row window.
  data::SinusoidSpec spec;
  spec.rows = 200;
  spec.vars = 2;
  spec.bins = {4.0};
  spec.period = 32;
  spec.snr_db = 60.0;
  data::write_csv(data::make_sinusoid_table(spec), path("sine.csv"));
  const auto r = invoke({"inspect-spectrum", "--config", conf_, "--csv", path("sine.csv"), "--origin", "64"});
  ASSERT_EQ(r.code, kOk) << r.err;
  std::map<std::string, std::vector<double>> sec;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "section,i,j,value");
  while (std::getline(in, line)) {
    const auto c1 = line.find(',');
    sec[line.substr(0, c1)].push_back(std::stod(line.substr(line.rfind(',') + 1)));
  }
  ASSERT_EQ(sec["mu"].size(), 17u);
  const auto peak = std::max_element(sec["mu"].begin(), sec["mu"].end()) - sec["mu"].begin();
  EXPECT_EQ(peak, 4);
  for (std::size_t f = 0; f < 17; ++f)
    if (f != 4) EXPECT_LT(sec["mu"][f], 0.05 * sec["mu"][4]);
  ASSERT_EQ(sec["prob"].size(), 3u);
  for (double p : sec["prob"]) EXPECT_NEAR(p, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(sec["e"].size(), 2u);
  EXPECT_EQ(sec["f1"].size(), 3u);
  EXPECT_EQ(sec["sigma"].size(), 3u);
  EXPECT_EQ(sec["response"].size(), 3u * 17);
  EXPECT_EQ(sec["k"].size(), 1u);
  EXPECT_EQ(sec["selected"].size(), static_cast<std::size_t>(sec["k"][0]));
}

TEST(InspectSpectrum, ZeroWindow) {
  moge::ModelConfig c;
  c.lookback = 32;
  c.horizon = 16;
  c.vars = 3;
  c.e_max = 7;
  moge::AdaMoGe model(c, 5);
  const auto r = inspect_spectrum(model, Tensor({32, 3}));
  for (double m : r.mu) EXPECT_EQ(m, 0.0);
  for (double e : r.e) EXPECT_EQ(e, 0.0);
  // chi = 0: z = w2 relu(b1) + b2 = 0 with zero biases, so k_hat = 1 + 6 / 2
  EXPECT_DOUBLE_EQ(r.k_hat, 4.0);
  EXPECT_EQ(r.k, 4u);
  EXPECT_EQ(r.selected, (std::vector<std::size_t>{0, 1, 2, 3}));
  for (double s : r.sigma) EXPECT_EQ(s, c.sigma_min);
}

TEST_F(Cli, GridWritesRankingAndWinnerConfig) {
  const auto r = invoke({"train", "--grid", "--config", conf_, "--override", "grid.e_max=2,3", "--override", "grid.depth=1",
                      "--override", "grid.feature_dim=4"});
  ASSERT_EQ(r.code, kOk) << r.err;
  const std::string grid = slurp(dir_ / "run" / "grid.csv");
  EXPECT_EQ(std::count(grid.begin(), grid.end(), '\n'), 3);
  const RunConfig winner = RunConfig::load(path("run/run.conf"));
  EXPECT_EQ(nlohmann::json::parse(slurp(dir_ / "run" / "report.json"))["fingerprint"], winner.fingerprint_hex());
  const auto e = invoke({"eval", "--config", path("run/run.conf")});
  EXPECT_EQ(e.code, kOk) << e.err;
  EXPECT_EQ(nlohmann::json::parse(e.out)["mse"], nlohmann::json::parse(r.out)["mse"]);
}

TEST_F(Cli, CommandsLeaveInputsUntouched) {
  const std::string before = slurp(csv_);
  const auto stamp = fs::last_write_time(csv_);
  ASSERT_EQ(invoke({"train", "--config", conf_}).code, kOk);
  invoke({"eval", "--config", conf_});
  invoke({"predict", "--config", conf_, "--origin", "40"});
  invoke({"inspect-spectrum", "--config", conf_, "--origin", "40"});
  EXPECT_EQ(slurp(csv_), before);
  EXPECT_EQ(fs::last_write_time(csv_), stamp);
}

TEST_F(Cli, SynthWritesTable) {
  ASSERT_EQ(invoke({"synth", "--output", path("s.csv"), "--rows", "123", "--vars", "3", "--bins", "1", "7"}).code, kOk);
  const auto t = data::load_csv(path("s.csv"));
  EXPECT_EQ(t.rows(), 123u);
  EXPECT_EQ(t.vars(), 3u);
}

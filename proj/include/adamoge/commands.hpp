#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "adamoge/config.hpp"
#include "adamoge/filterbank.hpp"
#include "adamoge/moge.hpp"

namespace adamoge::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataFailure = 2, kNumericFailure = 3 };

struct CommandOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  bool grid = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool allow_fingerprint_mismatch = false;
  std::string checkpoint;  // default: <out.dir>/model.ckpt
  std::string csv;         // default: data.path
  std::optional<std::size_t> origin;
  std::string output;      // predict / inspect-spectrum target file; stdout when empty
  bool verbose = false;
};

// Config file, then --override assignments in order, then --seed and --out.
RunConfig resolve_config(const CommandOptions& options);

int cmd_train(const CommandOptions& options);
int cmd_eval(const CommandOptions& options);
int cmd_predict(const CommandOptions& options);
int cmd_inspect_spectrum(const CommandOptions& options);

// Diagnostics of the first block for one (L x V) normalized window.
struct SpectrumReport {
  std::vector<double> mu;
  std::vector<double> e;
  std::vector<filterbank::Cutoffs> cutoffs;
  std::vector<double> sigma;  // empty for the hard bank
  Tensor responses;           // (E x F)
  std::vector<double> probs;
  double k_hat = 0.0;         // NaN when K is fixed
  std::size_t k = 0;
  std::vector<std::size_t> selected;
  std::vector<double> weights;
};

SpectrumReport inspect_spectrum(const moge::AdaMoGe& model, const Tensor& window);
// Long format: section,i,j,value
void write_spectrum_csv(std::ostream& out, const SpectrumReport& report);

// Parses argv and dispatches; exceptions map to exit codes
// (ConfigError 1, DataError 2, NumericError 3).
int run_cli(int argc, const char* const* argv);

}  // namespace adamoge::cli

// tsgan: rasterise time series, train a WGAN-GP on the images, sample,
// decode and evaluate.
//
//   tsgan <prepare|train|generate|evaluate|plot> [--config FILE] [--key value]...
//
// Exit codes: 0 success, 2 config/parameter error, 3 I/O or format error,
// 4 numeric failure.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tsgan/cli/config.hpp"
#include "tsgan/cli/pipeline.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

int run(const std::string& command, const tsgan::cli::PipelineConfig& cfg) {
  using namespace tsgan::cli;
  if (command == "prepare") {
    std::cout << "dataset written to " << cmd_prepare(cfg).string() << '\n';
  } else if (command == "train") {
    const auto out = cmd_train(cfg);
    std::cout << "checkpoint " << out.checkpoint.string() << ", trace " << out.trace.string() << " ("
              << out.result.trace.size() << " critic iterations)\n";
  } else if (command == "generate") {
    std::cout << "generated images written to " << cmd_generate(cfg).string() << '\n';
  } else if (command == "evaluate") {
    const auto out = cmd_evaluate(cfg);
    if (out.bandwidth_fallback)
      std::cerr << "warning: all pooled points identical, median bandwidth undefined; using sigma = 1\n";
    std::cout << format_report(out.report);
  } else if (command == "plot") {
    std::cout << "plot written to " << cmd_plot(cfg).string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-series synthesis with an image-based WGAN-GP"};
  app.require_subcommand(1);

  std::string config_file;
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"prepare", "window and rasterise the source signal into a PGM dataset"},
           {"train", "train the WGAN-GP on a prepared dataset"},
           {"generate", "sample images and decode them to raw and filtered series"},
           {"evaluate", "FID, MMD and mean spectra of real vs generated images"},
           {"plot", "SVG figures: grid, trace, series or spectrum"}}) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_file, "flat key = value config file");
    sub->allow_extras();
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  CLI::App* chosen = app.get_subcommands().front();
  try {
    tsgan::cli::ConfigMap map;
    if (!config_file.empty()) tsgan::cli::merge_config_file(map, config_file);
    tsgan::cli::merge_overrides(map, chosen->remaining());
    return run(chosen->get_name(), tsgan::cli::parse_config(map));
  } catch (const tsgan::ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const tsgan::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const tsgan::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

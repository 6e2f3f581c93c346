// radiobench: connect N ICY listeners to a stream and check what arrives.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "wavecaster/harness.hpp"

int main(int argc, char** argv) {
  using namespace wavecaster;

  CLI::App app{"ICY stream load generator"};
  harness::LoadTestOptions options;
  double expect_bitrate = 0.0;
  double max_sync = -1.0;
  std::string json_out;

  app.add_option("--url", options.url, "Stream URL, http://host:port/")->required();
  app.add_option("--listeners", options.listeners)->capture_default_str();
  app.add_option("--seconds", options.duration_s)->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--warmup", options.warmup_s, "Seconds excluded from rate measurement")
      ->capture_default_str();
  app.add_option("--expect-bitrate", expect_bitrate, "Expected audio rate A in kbps");
  app.add_option("--max-sync-kbps", max_sync, "Upper bound on non-audio rate B");
  app.add_option("--tolerance", options.expectations.model_tolerance,
                 "Allowed relative deviation from n(A+B)")
      ->capture_default_str();
  app.add_option("--json", json_out, "Write the report as JSON");
  CLI11_PARSE(app, argc, argv);

  if (expect_bitrate > 0) options.expectations.bitrate_kbps = expect_bitrate;
  if (max_sync >= 0) options.expectations.max_sync_kbps = max_sync;
  if (options.warmup_s >= options.duration_s) options.warmup_s = options.duration_s / 4;

  harness::SwarmReport report;
  try {
    report = harness::run_load_test(options);
  } catch (const std::exception& e) {
    std::cerr << "radiobench: " << e.what() << "\n";
    return 2;
  }
  const auto failures = harness::check_expectations(report, options.expectations);

  std::cout << "listeners " << report.n << ", aggregate " << report.aggregate_kbps
            << " kbps, A " << report.mean_audio_kbps << " kbps, B " << report.mean_sync_kbps
            << " kbps, model " << report.model_kbps << " kbps, residual "
            << report.residual * 100.0 << "%\n";
  for (const auto& l : report.listeners) {
    std::cout << "  #" << l.index << " " << l.disconnect_reason << " " << l.throughput_kbps
              << " kbps, " << l.frames_recovered << " frames"
              << (l.frames_aligned ? "" : " MISALIGNED") << ", " << l.titles.size()
              << " titles\n";
  }
  for (const auto& f : failures) std::cout << "FAIL " << f << "\n";

  if (!json_out.empty()) {
    std::ofstream out(json_out);
    out << harness::to_json(report, failures) << "\n";
    if (!out) {
      std::cerr << "radiobench: cannot write " << json_out << "\n";
      return 2;
    }
  }
  return failures.empty() ? 0 : 1;
}

// wavecaster: run the station, repair audio gaps, inspect MP3 files.

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "wavecaster/api.hpp"
#include "wavecaster/catalog.hpp"
#include "wavecaster/mp3frame.hpp"
#include "wavecaster/restore.hpp"
#include "wavecaster/scheduler.hpp"
#include "wavecaster/station.hpp"
#include "wavecaster/streamer.hpp"

namespace {

using namespace wavecaster;

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

struct ServeArgs {
  std::string library_dir = "library";
  std::string bind = "0.0.0.0";
  std::uint16_t stream_port = streamer::kDefaultStreamPort;
  std::uint16_t api_port = streamer::kDefaultApiPort;
  std::size_t metaint = streamer::kDefaultMetaint;
  double ring_seconds = streamer::kDefaultRingSeconds;
  std::size_t max_listeners = 100;
  std::string station_name = "Wavecaster";
  std::string station_genre = "Various";
  std::string public_host = "localhost";
  std::string tts_adapter = "stub";
  std::string announce_voice = "default";
  std::string console_dir;
  bool sequential = false;
};

int serve(const ServeArgs& args) {
  Catalog catalog(args.library_dir);
  streamer::BroadcastRing ring(args.ring_seconds);

  streamer::StreamServerConfig stream_config;
  stream_config.bind_address = args.bind;
  stream_config.port = args.stream_port;
  stream_config.metaint = args.metaint;
  stream_config.max_listeners = args.max_listeners;
  stream_config.station.name = args.station_name;
  stream_config.station.genre = args.station_genre;
  streamer::StreamServer stream_server(ring, stream_config);

  scheduler::StationConfig station_config;
  station_config.order =
      args.sequential ? scheduler::Order::kSequential : scheduler::Order::kWeightedShuffle;
  station_config.on_bitrate = [&](int kbps) { stream_server.set_bitrate(kbps); };
  scheduler::Station station(catalog, ring, station_config);

  auto synthesizer = scheduler::make_synthesizer(args.tts_adapter);
  api::ApiConfig api_config;
  api_config.console_dir = args.console_dir;
  api_config.default_voice = args.announce_voice;
  api_config.stream_url =
      "http://" + args.public_host + ":" + std::to_string(args.stream_port) + "/";
  api_config.channel.title = args.station_name;
  api_config.channel.link = "http://" + args.public_host + ":" + std::to_string(args.api_port);
  api::ApiService service(catalog, api_config);
  service.set_now_playing_source([&] { return station.now_playing(); });
  service.set_synthesizer(synthesizer.get());

  http::ServerConfig http_config;
  http_config.bind_address = args.bind;
  http_config.port = args.api_port;
  http::Server api_server([&](const http::Request& r) { return service.route(r); }, http_config);

  stream_server.start();
  api_server.start();
  station.start();
  spdlog::info("streaming on port {}, API on port {}, library {}", stream_server.port(),
               api_server.port(), args.library_dir);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));

  spdlog::info("shutting down");
  station.stop();
  ring.close();
  api_server.stop();
  stream_server.stop();
  return 0;
}

int restore_gap(const std::string& in, const std::string& out, std::size_t gap_start,
                std::size_t gap_len, std::size_t order) {
  auto wav = restore::read_wav(in);
  restore::GapFillOptions options;
  options.order = order;
  wav.samples = restore::gap_fill(wav.samples, gap_start, gap_len, options);
  restore::write_wav(out, wav);
  std::cout << "restored " << gap_len << " samples at " << gap_start << " (order " << order
            << ") -> " << out << "\n";
  return 0;
}

int info(const std::vector<std::string>& files) {
  int status = 0;
  for (const auto& file : files) {
    try {
      auto bytes = mp3::read_file(file);
      auto s = mp3::stream_info(bytes);
      std::cout << file << ": " << s.frame_count << " frames, " << s.total_duration_s << " s, "
                << s.nominal_bitrate_kbps << " kbps" << (s.is_cbr ? " CBR" : " VBR") << ", "
                << s.sample_rate_hz << " Hz, " << s.junk_bytes << " junk bytes\n";
    } catch (const std::exception& e) {
      std::cerr << file << ": " << e.what() << "\n";
      status = 1;
    }
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Internet radio station server"};
  app.require_subcommand(1);

  ServeArgs serve_args;
  if (const char* env = std::getenv("WAVECASTER_LIBRARY_DIR"); env && *env) {
    serve_args.library_dir = env;
  }
  auto* serve_cmd = app.add_subcommand("serve", "Run the stream server, scheduler and API");
  serve_cmd->add_option("--library", serve_args.library_dir,
                        "Library directory (default: $WAVECASTER_LIBRARY_DIR or ./library)");
  serve_cmd->add_option("--bind", serve_args.bind, "Bind address");
  serve_cmd->add_option("--stream-port", serve_args.stream_port, "ICY stream port")
      ->capture_default_str();
  serve_cmd->add_option("--api-port", serve_args.api_port, "Control API port")
      ->capture_default_str();
  serve_cmd->add_option("--metaint", serve_args.metaint, "Audio bytes between metadata blocks")
      ->capture_default_str()
      ->check(CLI::Range(1, 1 << 20));
  serve_cmd->add_option("--ring-seconds", serve_args.ring_seconds, "Broadcast buffer length")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  serve_cmd->add_option("--max-listeners", serve_args.max_listeners, "0 = unlimited")
      ->capture_default_str();
  serve_cmd->add_option("--station-name", serve_args.station_name)->capture_default_str();
  serve_cmd->add_option("--station-genre", serve_args.station_genre)->capture_default_str();
  serve_cmd->add_option("--public-host", serve_args.public_host,
                        "Host name used in stream and feed URLs")
      ->capture_default_str();
  serve_cmd->add_option("--tts-adapter", serve_args.tts_adapter,
                        "\"stub\", an http:// endpoint or a command")
      ->capture_default_str();
  serve_cmd->add_option("--announce-voice", serve_args.announce_voice)->capture_default_str();
  serve_cmd->add_option("--console-dir", serve_args.console_dir, "Static console assets");
  serve_cmd->add_flag("--sequential", serve_args.sequential,
                      "Play the library in order instead of weighted shuffle");

  std::string in, out;
  std::size_t gap_start = 0, gap_len = 0, order = wavecaster::restore::kDefaultOrder;
  auto* restore_cmd = app.add_subcommand("restore", "Fill a gap in a mono WAV file");
  restore_cmd->add_option("--in", in)->required()->check(CLI::ExistingFile);
  restore_cmd->add_option("--out", out)->required();
  restore_cmd->add_option("--gap-start", gap_start)->required();
  restore_cmd->add_option("--gap-len", gap_len)->required();
  restore_cmd->add_option("--order", order)->capture_default_str();

  std::vector<std::string> files;
  auto* info_cmd = app.add_subcommand("info", "Print frame statistics of MP3 files");
  info_cmd->add_option("files", files)->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*serve_cmd) return serve(serve_args);
    if (*restore_cmd) return restore_gap(in, out, gap_start, gap_len, order);
    if (*info_cmd) return info(files);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

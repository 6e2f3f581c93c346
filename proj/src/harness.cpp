#include "wavecaster/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <set>
#include <thread>

#include <json.hpp>

#include "wavecaster/mp3frame.hpp"
#include "wavecaster/net.hpp"

namespace wavecaster::harness {

using SteadyClock = std::chrono::steady_clock;

void FrameWalker::feed(std::span<const std::uint8_t> bytes) {
  pending_.insert(pending_.end(), bytes.begin(), bytes.end());
  std::size_t pos = 0;
  while (aligned_ && pending_.size() - pos >= 4) {
    auto header = mp3::probe_header(std::span<const std::uint8_t>(pending_).subspan(pos, 4));
    if (!header) {
      aligned_ = false;
      break;
    }
    const auto len = static_cast<std::size_t>(header->frame_len_bytes);
    if (pending_.size() - pos < len) break;
    pos += len;
    ++frames_;
    frame_bytes_ += len;
  }
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(pos));
}

namespace {

double kbps(std::uint64_t bytes, double seconds) {
  return seconds > 0 ? static_cast<double>(bytes) * 8.0 / 1000.0 / seconds : 0.0;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

struct Shared {
  SteadyClock::time_point t0;
  double duration_s;
  double warmup_s;
  bool capture;
};

void run_listener(const net::Url& url, const Shared& shared, std::optional<double> kill_at,
                  ListenerReport& report) {
  const auto end = shared.t0 + std::chrono::duration_cast<SteadyClock::duration>(
                                   std::chrono::duration<double>(shared.duration_s));
  const auto warm = shared.t0 + std::chrono::duration_cast<SteadyClock::duration>(
                                    std::chrono::duration<double>(shared.warmup_s));
  const auto kill = kill_at ? std::optional(shared.t0 + std::chrono::duration_cast<SteadyClock::duration>(
                                                            std::chrono::duration<double>(*kill_at)))
                            : std::nullopt;

  net::Socket sock;
  try {
    sock = net::connect_tcp(url.host, url.port);
  } catch (const std::exception& e) {
    report.disconnect_reason = std::string("connect failed: ") + e.what();
    return;
  }
  sock.set_recv_timeout(std::chrono::milliseconds(250));
  const std::string request = "GET " + url.path + " HTTP/1.0\r\nHost: " + url.host +
                              "\r\nUser-Agent: radiobench\r\nIcy-MetaData: 1\r\n\r\n";
  if (!sock.send_all(request)) {
    report.disconnect_reason = "handshake failed: request not sent";
    return;
  }

  std::string head;
  std::vector<std::uint8_t> leftover;
  std::uint8_t buf[16384];
  while (true) {
    if (SteadyClock::now() >= end) {
      report.disconnect_reason = "handshake failed: timeout";
      return;
    }
    long n = sock.recv_some(buf);
    if (n == 0) {
      report.disconnect_reason = "handshake failed: closed";
      return;
    }
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK) continue;
      report.disconnect_reason = "handshake failed: receive error";
      return;
    }
    head.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
    auto pos = head.find("\r\n\r\n");
    if (pos != std::string::npos) {
      leftover.assign(head.begin() + static_cast<std::ptrdiff_t>(pos + 4), head.end());
      head.resize(pos + 4);
      break;
    }
    if (head.size() > 16384) {
      report.disconnect_reason = "handshake failed: header too long";
      return;
    }
  }
  report.header_bytes = head.size();
  report.status_line = head.substr(0, head.find("\r\n"));
  if (report.status_line.rfind("ICY 200", 0) != 0) {
    report.disconnect_reason = "handshake failed: " + report.status_line;
    return;
  }
  std::size_t line_start = head.find("\r\n") + 2;
  while (line_start < head.size()) {
    auto eol = head.find("\r\n", line_start);
    std::string line = head.substr(line_start, eol - line_start);
    line_start = eol + 2;
    auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string value = line.substr(colon + 1);
    value.erase(0, value.find_first_not_of(' '));
    report.icy_headers[lower(line.substr(0, colon))] = value;
  }
  if (auto it = report.icy_headers.find("icy-metaint"); it != report.icy_headers.end()) {
    try {
      report.metaint = static_cast<std::size_t>(std::stoul(it->second));
    } catch (const std::exception&) {
      report.metaint = 0;
    }
  }
  if (report.metaint == 0) {
    report.disconnect_reason = "handshake failed: no icy-metaint";
    return;
  }

  streamer::MetadataStripper stripper(report.metaint);
  FrameWalker walker;
  std::vector<std::uint8_t> audio;
  std::optional<SteadyClock::time_point> warm_at;
  std::uint64_t wire_at_warm = 0, audio_at_warm = 0, meta_at_warm = 0;

  auto consume = [&](std::span<const std::uint8_t> wire) {
    report.bytes_received += wire.size();
    if (shared.capture) report.captured_wire.insert(report.captured_wire.end(), wire.begin(), wire.end());
    audio.clear();
    stripper.feed(wire, audio);
    walker.feed(audio);
    if (shared.capture) {
      report.captured_audio.insert(report.captured_audio.end(), audio.begin(), audio.end());
    }
  };
  if (!leftover.empty()) consume(leftover);

  std::string reason = "completed";
  for (;;) {
    const auto now = SteadyClock::now();
    if (!warm_at && now >= warm) {
      warm_at = now;
      wire_at_warm = report.bytes_received;
      audio_at_warm = stripper.audio_bytes();
      meta_at_warm = stripper.metadata_bytes();
    }
    if (kill && now >= *kill) {
      reason = "killed";
      break;
    }
    if (now >= end) break;
    long n = sock.recv_some(buf);
    if (n == 0) {
      reason = "server closed";
      break;
    }
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK) continue;
      reason = "receive error";
      break;
    }
    consume(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(n)));
  }
  const auto stopped = SteadyClock::now();
  sock.close();

  report.disconnect_reason = reason;
  report.audio_bytes = stripper.audio_bytes();
  report.metadata_bytes = stripper.metadata_bytes();
  report.metadata_malformed = stripper.malformed();
  report.titles = stripper.titles();
  report.frames_recovered = walker.frames();
  report.frame_bytes = walker.frame_bytes();
  report.frames_aligned = walker.aligned();
  if (warm_at) {
    report.window_s = std::chrono::duration<double>(stopped - *warm_at).count();
    report.throughput_kbps = kbps(report.bytes_received - wire_at_warm, report.window_s);
    report.audio_kbps = kbps(report.audio_bytes - audio_at_warm, report.window_s);
    report.sync_kbps = kbps(report.metadata_bytes - meta_at_warm, report.window_s);
  }
}

}  // namespace

SwarmReport run_load_test(const LoadTestOptions& options) {
  SwarmReport report;
  report.n = options.listeners;
  report.duration_s = options.duration_s;
  report.warmup_s = options.warmup_s;
  report.listeners.resize(options.listeners);
  if (options.listeners == 0) return report;

  const net::Url url = net::parse_url(options.url);
  Shared shared{SteadyClock::now(), options.duration_s, options.warmup_s, options.capture};
  std::vector<std::thread> threads;
  threads.reserve(options.listeners);
  for (std::size_t i = 0; i < options.listeners; ++i) {
    report.listeners[i].index = i;
    std::optional<double> kill_at;
    for (const auto& k : options.kills) {
      if (k.listener == i) kill_at = k.at_s;
    }
    threads.emplace_back(
        [&, i, kill_at] { run_listener(url, shared, kill_at, report.listeners[i]); });
  }
  for (auto& t : threads) t.join();

  std::size_t completed = 0;
  double audio_sum = 0.0, sync_sum = 0.0;
  for (const auto& l : report.listeners) {
    if (l.disconnect_reason != "completed") continue;
    ++completed;
    report.aggregate_kbps += l.throughput_kbps;
    audio_sum += l.audio_kbps;
    sync_sum += l.sync_kbps;
  }
  if (completed > 0) {
    report.mean_audio_kbps = audio_sum / static_cast<double>(completed);
    report.mean_sync_kbps = sync_sum / static_cast<double>(completed);
    const double a = options.expectations.bitrate_kbps.value_or(report.mean_audio_kbps);
    report.model_kbps = streamer::estimate_bandwidth(static_cast<double>(completed), a,
                                                     report.mean_sync_kbps);
    if (report.model_kbps > 0) {
      report.residual = (report.aggregate_kbps - report.model_kbps) / report.model_kbps;
    }
  }
  return report;
}

std::vector<std::string> check_expectations(const SwarmReport& report,
                                            const Expectations& expectations) {
  std::vector<std::string> failures;
  const std::set<std::string> expected_end{"completed", "killed"};
  for (const auto& l : report.listeners) {
    const std::string who = "listener " + std::to_string(l.index);
    if (!expected_end.contains(l.disconnect_reason)) {
      failures.push_back(who + ": " + l.disconnect_reason);
      continue;
    }
    if (!l.frames_aligned) failures.push_back(who + ": frame alignment lost");
    if (l.metadata_malformed) failures.push_back(who + ": malformed metadata block");
    if (l.frame_bytes > l.bytes_received) failures.push_back(who + ": more frame bytes than received");
    if (l.disconnect_reason != "completed") continue;
    if (expectations.bitrate_kbps) {
      const double want = *expectations.bitrate_kbps;
      if (std::abs(l.audio_kbps - want) > want * expectations.bitrate_tolerance) {
        failures.push_back(who + ": audio " + std::to_string(l.audio_kbps) + " kbps, expected " +
                           std::to_string(want));
      }
    }
  }
  if (expectations.max_sync_kbps && report.mean_sync_kbps > *expectations.max_sync_kbps) {
    failures.push_back("sync overhead " + std::to_string(report.mean_sync_kbps) + " kbps exceeds " +
                       std::to_string(*expectations.max_sync_kbps));
  }
  if (report.model_kbps > 0 && std::abs(report.residual) > expectations.model_tolerance) {
    failures.push_back("aggregate " + std::to_string(report.aggregate_kbps) +
                       " kbps deviates from model " + std::to_string(report.model_kbps));
  }
  return failures;
}

std::string to_json(const SwarmReport& report, const std::vector<std::string>& failures) {
  using nlohmann::json;
  json listeners = json::array();
  for (const auto& l : report.listeners) {
    json titles = json::array();
    for (const auto& t : l.titles) {
      titles.push_back({{"title", t.text}, {"audio_offset", t.audio_offset},
                        {"wire_offset", t.wire_offset}});
    }
    listeners.push_back({{"index", l.index},
                         {"bytes_received", l.bytes_received},
                         {"audio_bytes", l.audio_bytes},
                         {"metadata_bytes", l.metadata_bytes},
                         {"frames_recovered", l.frames_recovered},
                         {"frames_aligned", l.frames_aligned},
                         {"throughput_kbps", l.throughput_kbps},
                         {"audio_kbps", l.audio_kbps},
                         {"sync_kbps", l.sync_kbps},
                         {"titles", titles},
                         {"disconnect_reason", l.disconnect_reason}});
  }
  json out = {{"n", report.n},
              {"duration_s", report.duration_s},
              {"warmup_s", report.warmup_s},
              {"aggregate_kbps", report.aggregate_kbps},
              {"mean_audio_kbps", report.mean_audio_kbps},
              {"mean_sync_kbps", report.mean_sync_kbps},
              {"model_kbps", report.model_kbps},
              {"residual", report.residual},
              {"listeners", listeners},
              {"failures", failures},
              {"pass", failures.empty()}};
  return out.dump(2);
}

}  // namespace wavecaster::harness

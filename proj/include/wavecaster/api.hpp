#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "wavecaster/catalog.hpp"
#include "wavecaster/http.hpp"
#include "wavecaster/scheduler.hpp"
#include "wavecaster/station.hpp"

namespace wavecaster::api {

struct FeedChannel {
  std::string title = "Wavecaster";
  std::string link;  // base URL of the API, e.g. http://host:8089
  std::string description = "Recorded programs";
  std::string language = "pl";
};

/// RSS 2.0 feed with one item per program that is published and done,
/// newest first. `enclosure_length` reports the audio size in bytes.
std::string build_podcast_feed(const std::vector<ScheduledProgram>& programs,
                               const FeedChannel& channel,
                               const std::function<std::uint64_t(const ScheduledProgram&)>&
                                   enclosure_length = {});

std::string xml_escape(std::string_view text);

struct ApiConfig {
  /// Where uploads and committed announcements are stored.
  std::filesystem::path media_dir;
  /// Scratch space for announcement drafts.
  std::filesystem::path draft_dir;
  /// Static console assets served under /console/. Empty disables it.
  std::filesystem::path console_dir;
  std::string stream_url;
  FeedChannel channel;
  std::string default_voice = "default";
  /// Console bootstrap: now-playing poll and ad rotation periods.
  int poll_interval_ms = 5000;
  int rotation_interval_ms = 5000;
};

/// JSON control plane. route() never throws: every request yields a
/// well-formed response.
class ApiService {
 public:
  using Clock = std::function<TimePoint()>;
  using NowPlayingSource = std::function<std::optional<scheduler::NowPlaying>()>;

  ApiService(Catalog& catalog, ApiConfig config);

  void set_now_playing_source(NowPlayingSource source) { now_playing_ = std::move(source); }
  void set_synthesizer(scheduler::SpeechSynthesizer* synthesizer) { synthesizer_ = synthesizer; }
  /// Test hook; defaults to the wall clock.
  void set_clock(Clock clock) { clock_ = std::move(clock); }

  http::Response route(const http::Request& request);

 private:
  using Params = std::vector<std::string>;

  http::Response dispatch(const http::Request& request);
  std::string require_user(const http::Request& request);

  http::Response register_user(const http::Request& request);
  http::Response login(const http::Request& request);
  http::Response like(const http::Request& request);
  http::Response list_ads(const http::Request& request);
  http::Response now_playing();
  http::Response stats_csv();
  http::Response stats_json(const http::Request& request);
  http::Response feed();
  http::Response upload_track(const http::Request& request);
  http::Response upload_ad(const http::Request& request);
  http::Response ad_creative(const std::string& id);
  http::Response impression(const std::string& id);
  http::Response reset_impressions(const std::string& id);
  http::Response create_program(const http::Request& request);
  http::Response list_programs();
  http::Response cancel_program(const std::string& id);
  http::Response publish_program(const http::Request& request, const std::string& id);
  http::Response program_audio(const std::string& id);
  http::Response announce(const http::Request& request);
  http::Response commit_draft(const std::string& id);
  http::Response draft_audio(const std::string& id);
  http::Response console_asset(const std::string& relative);

  std::filesystem::path store_upload(const std::string& stem, const std::string& data,
                                     const std::string& extension);
  std::uint64_t program_bytes(const ScheduledProgram& program) const;

  Catalog& catalog_;
  ApiConfig config_;
  Clock clock_;
  NowPlayingSource now_playing_;
  scheduler::SpeechSynthesizer* synthesizer_ = nullptr;

  std::mutex drafts_mutex_;
  std::map<std::string, scheduler::AnnouncementDraft> drafts_;
  std::uint64_t next_draft_ = 1;
};

}  // namespace wavecaster::api

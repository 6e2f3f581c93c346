#include "wavecaster/station.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

namespace wavecaster::scheduler {

using SteadyClock = std::chrono::steady_clock;

namespace {

constexpr std::size_t kMaxEvents = 1000;

double seconds_between(SteadyClock::time_point a, SteadyClock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

}  // namespace

Station::Station(Catalog& catalog, streamer::BroadcastRing& ring, StationConfig config)
    : catalog_(catalog),
      ring_(ring),
      config_(std::move(config)),
      rng_(config_.seed),
      pacer_(SteadyClock::now()) {
  state_.order = config_.order;
}

Station::~Station() { stop(); }

void Station::start() {
  if (running_.exchange(true)) return;
  // A program left playing by an earlier process can never resume.
  for (const auto& p : catalog_.programs()) {
    if (p.state == ProgramState::kPlaying) {
      catalog_.transition_program(p.id, ProgramState::kPlaying, ProgramState::kDone, now_ms());
    }
  }
  pacer_.rebase(SteadyClock::now());
  thread_ = std::thread([this] { run(); });
}

void Station::stop() {
  if (!running_.exchange(false)) {
    if (thread_.joinable()) thread_.join();
    return;
  }
  {
    std::lock_guard lock(wake_mutex_);
  }
  wake_.notify_all();
  if (thread_.joinable()) thread_.join();
}

std::optional<NowPlaying> Station::now_playing() const {
  std::lock_guard lock(info_mutex_);
  return now_playing_;
}

PacingStats Station::pacing() const {
  std::lock_guard lock(info_mutex_);
  return pacing_;
}

std::vector<StationEvent> Station::events() const {
  std::lock_guard lock(info_mutex_);
  return events_;
}

bool Station::wait_until(SteadyClock::time_point deadline) {
  std::unique_lock lock(wake_mutex_);
  wake_.wait_until(lock, deadline, [this] { return !running_.load(); });
  return running_.load();
}

void Station::run() {
  while (running_) {
    const auto tracks = catalog_.tracks();
    std::map<std::string, double> durations;
    std::map<std::string, const Track*> by_id;
    for (const auto& t : tracks) {
      durations[t.id] = t.duration_s;
      by_id[t.id] = &t;
    }
    state_.base_playlist.clear();
    for (const auto& id : catalog_.playlist()) {
      auto it = by_id.find(id);
      if (it != by_id.end() && it->second->genre != kAnnouncementGenre) {
        state_.base_playlist.push_back(id);
      }
    }
    state_.program_queue = pending_programs(catalog_.programs());

    TimePoint now = now_ms();
    if (state_.current_track) now = std::max(now, state_.current_end());
    const auto likes = catalog_.like_counts(now);
    Action action = scheduler_step(state_, now, durations, likes, rng_);
    {
      std::lock_guard lock(info_mutex_);
      if (events_.size() >= kMaxEvents) events_.erase(events_.begin());
      events_.push_back({now, action});
    }

    switch (action.kind) {
      case ActionKind::kIdle:
        if (!wait_until(SteadyClock::now() + config_.idle_poll)) return;
        pacer_.rebase(SteadyClock::now());
        continue;
      case ActionKind::kFinishProgram:
        try {
          catalog_.transition_program(action.program_id, ProgramState::kPlaying,
                                      ProgramState::kDone, now);
        } catch (const CatalogError& e) {
          spdlog::warn("finishing program {}: {}", action.program_id, e.what());
        }
        continue;
      case ActionKind::kStartProgram:
        try {
          catalog_.transition_program(action.program_id, ProgramState::kPending,
                                      ProgramState::kPlaying, now);
        } catch (const CatalogError& e) {
          // Cancelled between the queue refresh and now.
          spdlog::warn("starting program {}: {}", action.program_id, e.what());
          state_.active_program.reset();
          state_.mode = Mode::kShuffle;
          state_.current_track.reset();
          continue;
        }
        break;
      case ActionKind::kStartTrack:
        break;
    }

    auto it = by_id.find(action.track_id);
    if (it == by_id.end() || !play(*it->second, action.program_id)) {
      if (!running_) return;
      state_.current_duration_s = 0.0;
      if (!wait_until(SteadyClock::now() + config_.idle_poll)) return;
      pacer_.rebase(SteadyClock::now());
    }
  }
}

bool Station::play(const Track& track, const std::string& program_id) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = mp3::read_file(track.path);
  } catch (const std::exception& e) {
    spdlog::error("skipping {}: {}", track.id, e.what());
    std::lock_guard lock(info_mutex_);
    ++pacing_.skipped;
    return false;
  }
  const auto frames = mp3::iterate_frames(bytes);
  if (frames.empty()) {
    std::lock_guard lock(info_mutex_);
    ++pacing_.skipped;
    return false;
  }
  {
    std::lock_guard lock(info_mutex_);
    now_playing_ = NowPlaying{track, program_id, now_ms()};
    ++pacing_.tracks;
  }
  if (config_.on_bitrate && track.bitrate_kbps > 0) config_.on_bitrate(track.bitrate_kbps);
  spdlog::info("playing {} ({})", track.display_title(), track.id);

  const std::string title = track.display_title();
  for (const auto& frame : frames) {
    const auto deadline = pacer_.next_deadline();
    if (!wait_until(deadline)) return false;
    ring_.publish(std::vector<std::uint8_t>(frame.bytes.begin(), frame.bytes.end()),
                  frame.header.duration_s(), title);
    const auto published = SteadyClock::now();
    pacer_.advance(frame.header.duration_s());
    std::lock_guard lock(info_mutex_);
    ++pacing_.frames;
    pacing_.scheduled_s = pacer_.scheduled_s();
    pacing_.max_lateness_s =
        std::max(pacing_.max_lateness_s, seconds_between(deadline, published));
    pacing_.drift_s = seconds_between(pacer_.origin(), published) -
                      (pacer_.scheduled_s() - frame.header.duration_s());
  }
  return true;
}

}  // namespace wavecaster::scheduler

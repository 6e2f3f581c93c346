#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "wavecaster/catalog.hpp"
#include "wavecaster/scheduler.hpp"
#include "wavecaster/streamer.hpp"

namespace wavecaster::scheduler {

struct StationConfig {
  Order order = Order::kWeightedShuffle;
  std::uint64_t seed = std::random_device{}();
  /// How often an empty library is re-checked.
  std::chrono::milliseconds idle_poll{200};
  /// Told the bitrate of each track as it starts.
  std::function<void(int)> on_bitrate;
};

struct NowPlaying {
  Track track;
  std::string program_id;  // empty outside programs
  TimePoint started;
};

struct PacingStats {
  std::uint64_t frames = 0;
  std::uint64_t tracks = 0;
  std::uint64_t skipped = 0;  // tracks whose file could not be read
  double scheduled_s = 0.0;
  double max_lateness_s = 0.0;
  /// Wall time since the pacing origin minus scheduled audio time, at the
  /// last publish.
  double drift_s = 0.0;
};

struct StationEvent {
  TimePoint at;
  Action action;
};

/// The producer: runs the scheduler at track boundaries and publishes each
/// frame into the ring at its pacing deadline.
class Station {
 public:
  Station(Catalog& catalog, streamer::BroadcastRing& ring, StationConfig config = {});
  ~Station();
  Station(const Station&) = delete;
  Station& operator=(const Station&) = delete;

  void start();
  void stop();

  std::optional<NowPlaying> now_playing() const;
  PacingStats pacing() const;
  std::vector<StationEvent> events() const;

 private:
  void run();
  bool play(const Track& track, const std::string& program_id);
  /// Sleeps until `deadline`; false when stopped meanwhile.
  bool wait_until(std::chrono::steady_clock::time_point deadline);

  Catalog& catalog_;
  streamer::BroadcastRing& ring_;
  StationConfig config_;
  Rng rng_;
  PlayState state_;
  streamer::Pacer pacer_;

  std::atomic<bool> running_{false};
  std::thread thread_;
  std::mutex wake_mutex_;
  std::condition_variable wake_;

  mutable std::mutex info_mutex_;
  std::optional<NowPlaying> now_playing_;
  PacingStats pacing_;
  std::vector<StationEvent> events_;
};

}  // namespace wavecaster::scheduler

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavecaster/catalog.hpp"
#include "wavecaster/mp3frame.hpp"

namespace wavecaster::scheduler {

using LikeCounts = std::map<std::string, std::size_t>;
using Rng = std::mt19937_64;

class EmptyLibraryError : public std::runtime_error {
 public:
  EmptyLibraryError() : std::runtime_error("library is empty") {}
};

/// Weighted shuffle draw: each track has weight 1 + live likes. When the
/// library has two or more tracks, `previous` is excluded from the draw.
std::string next_item(std::span<const std::string> library, const LikeCounts& likes,
                      const std::optional<std::string>& previous, Rng& rng);

enum class Mode { kShuffle, kProgram };
/// kSequential walks the base playlist in order, wrapping to the start.
enum class Order { kWeightedShuffle, kSequential };

struct PlayState {
  Mode mode = Mode::kShuffle;
  Order order = Order::kWeightedShuffle;
  std::optional<std::string> current_track;
  TimePoint current_started{};
  double current_duration_s = 0.0;
  std::optional<std::string> previous_track;
  /// Pending programs, by requested start then enqueue order.
  std::vector<ScheduledProgram> program_queue;
  std::optional<ScheduledProgram> active_program;
  std::size_t program_cursor = 0;
  std::vector<std::string> base_playlist;
  std::size_t base_index = 0;

  TimePoint current_end() const;
};

enum class ActionKind { kIdle, kStartTrack, kStartProgram, kFinishProgram };

const char* to_string(ActionKind kind);

struct Action {
  ActionKind kind = ActionKind::kIdle;
  std::string track_id;    // kStartTrack, kStartProgram
  std::string program_id;  // kStartProgram, kFinishProgram, or a program item
  bool operator==(const Action&) const = default;
};

/// One decision of the play-out state machine.
///
/// Mid-track: idle. At a boundary: continue the active program, or finish it
/// (back to shuffle on the next call), or start the earliest due program, or
/// start the next shuffle track. A program that falls due mid-track waits
/// for the boundary, and a playing program is never interrupted.
Action scheduler_step(PlayState& state, TimePoint now,
                      const std::map<std::string, double>& durations, const LikeCounts& likes,
                      Rng& rng);

/// Sorts pending programs into play order.
std::vector<ScheduledProgram> pending_programs(const std::vector<ScheduledProgram>& all);

/// Validates and stores a program in pending state.
ScheduledProgram enqueue_program(Catalog& catalog, const std::vector<std::string>& items,
                                 TimePoint requested_start, TimePoint now,
                                 const std::string& title = {},
                                 const std::string& description = {});
/// Only pending programs may be cancelled.
void cancel_program(Catalog& catalog, const std::string& id, TimePoint now);

// ---------------------------------------------------------------------------
// Announcements

class SynthesisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text-to-speech backend. Produces an MP3 file and returns its path.
class SpeechSynthesizer {
 public:
  virtual ~SpeechSynthesizer() = default;
  virtual std::filesystem::path synthesize(const std::string& text, const std::string& voice,
                                           const std::filesystem::path& work_dir) = 0;
};

/// Deterministic stand-in: writes silent 128 kbps audio, one second plus
/// 50 ms per character of text.
class StubSynthesizer : public SpeechSynthesizer {
 public:
  std::filesystem::path synthesize(const std::string& text, const std::string& voice,
                                   const std::filesystem::path& work_dir) override;
};

/// Runs `<program> <text> <voice> <work_dir>`; the program prints the path
/// of the MP3 it wrote on stdout and exits 0.
class CommandSynthesizer : public SpeechSynthesizer {
 public:
  explicit CommandSynthesizer(std::string program) : program_(std::move(program)) {}
  std::filesystem::path synthesize(const std::string& text, const std::string& voice,
                                   const std::filesystem::path& work_dir) override;

 private:
  std::string program_;
};

/// POSTs {"text", "voice"} as JSON to an http:// endpoint. The reply is
/// either audio/mpeg bytes or JSON {"path": "..."}.
class HttpSynthesizer : public SpeechSynthesizer {
 public:
  explicit HttpSynthesizer(std::string url) : url_(std::move(url)) {}
  std::filesystem::path synthesize(const std::string& text, const std::string& voice,
                                   const std::filesystem::path& work_dir) override;

 private:
  std::string url_;
};

/// "stub", an http:// URL, or a program path.
std::unique_ptr<SpeechSynthesizer> make_synthesizer(const std::string& adapter);

/// A synthesized announcement awaiting operator approval.
struct AnnouncementDraft {
  std::string text;
  std::string voice;
  std::filesystem::path path;
  mp3::StreamInfo info;
};

/// First phase: synthesize and validate. Throws SynthesisError when the
/// adapter fails or its output is not MP3; nothing is stored.
AnnouncementDraft make_announcement(const std::string& text, const std::string& voice,
                                    SpeechSynthesizer& synthesizer,
                                    const std::filesystem::path& work_dir);

/// Second phase: copy into the library and ingest as genre "announcement".
Track commit_announcement(Catalog& catalog, const AnnouncementDraft& draft, TimePoint now);

inline constexpr const char* kAnnouncementGenre = "announcement";

}  // namespace wavecaster::scheduler

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavecaster/timeutil.hpp"

namespace wavecaster {

struct TrackMeta {
  std::string title;
  std::string artist;
  std::string album;
  std::string genre;
  std::string language;
};

struct Track {
  std::string id;
  std::string title;
  std::string artist;
  std::string album;
  std::string genre;
  std::string language;
  std::string path;
  TimePoint added;
  double duration_s = 0.0;
  int bitrate_kbps = 0;

  /// "Artist - Title", or just the title when there is no artist.
  std::string display_title() const;
  bool operator==(const Track&) const = default;
};

struct Ad {
  std::string id;
  std::string creative_path;
  std::string target_genre;
  std::string click_url;
  std::uint64_t impressions = 0;
  bool operator==(const Ad&) const = default;
};

struct UserAccount {
  std::string id;
  std::string login;
  std::string credential;  // pbkdf2-sha256$iterations$salt$digest
  TimePoint registered;
  TimePoint last_seen;
  bool operator==(const UserAccount&) const = default;
};

struct Like {
  std::string user_id;
  std::string track_id;
  std::string genre;
  TimePoint at;
  bool operator==(const Like&) const = default;
};

enum class ProgramState { kPending, kPlaying, kDone, kCancelled };

const char* to_string(ProgramState state);
ProgramState program_state_from_string(const std::string& text);

struct ScheduledProgram {
  std::string id;
  std::string title;
  std::string description;
  TimePoint requested_start;
  std::vector<std::string> items;
  ProgramState state = ProgramState::kPending;
  bool published = false;
  std::uint64_t enqueue_seq = 0;
  std::optional<TimePoint> started_at;
  std::optional<TimePoint> finished_at;
  bool operator==(const ScheduledProgram&) const = default;
};

struct GenreCount {
  std::string genre;
  std::size_t count = 0;
  bool operator==(const GenreCount&) const = default;
};

struct TrackLikes {
  Track track;
  std::size_t likes = 0;
};

/// Everything the store persists. Documents map 1:1 onto files.
struct CatalogData {
  std::vector<Track> songs;
  std::vector<std::string> playlist;
  std::vector<UserAccount> users;
  std::vector<Like> likes;
  std::vector<Ad> ads;
  std::vector<ScheduledProgram> programs;
  std::uint64_t next_program_seq = 1;
  bool operator==(const CatalogData&) const = default;
};

struct CatalogPolicy {
  std::chrono::milliseconds like_lifetime = std::chrono::hours(24 * 30);
  std::chrono::milliseconds like_cooldown = std::chrono::hours(24);
  std::chrono::milliseconds session_idle = std::chrono::hours(24);
  int pbkdf2_iterations = 20000;
};

class CatalogError : public std::runtime_error {
 public:
  enum class Code { kNotFound, kInvalid, kConflict, kUnauthorized, kIo };
  CatalogError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

/// Persistent store for tracks, ads, users, likes and programs.
///
/// Mutations are serialized and atomic: each one builds the new document,
/// writes it to disk (temp file + rename) and only then publishes it in
/// memory, so a failed write leaves both disk and memory unchanged. Reads
/// take a shared lock and may run concurrently.
class Catalog {
 public:
  /// Opens (or creates) the store in `dir`, loading any existing documents.
  explicit Catalog(std::filesystem::path dir, CatalogPolicy policy = {});

  const std::filesystem::path& dir() const { return dir_; }
  const CatalogPolicy& policy() const { return policy_; }

  // Tracks.
  Track add_track(const TrackMeta& meta, const std::filesystem::path& file, TimePoint now);
  std::optional<Track> find_track(const std::string& id) const;
  std::vector<Track> tracks() const;
  std::vector<std::string> playlist() const;

  // Users and sessions.
  UserAccount register_user(const std::string& login, const std::string& secret,
                            TimePoint now);
  /// Returns an opaque session token. Accepts either the login or the user id.
  std::string authenticate(const std::string& login_or_id, const std::string& secret,
                           TimePoint now);
  /// Returns the session's user id and refreshes its activity stamp, or
  /// throws kUnauthorized for unknown or idle-expired tokens.
  std::string validate_session(const std::string& token, TimePoint now);
  std::optional<UserAccount> find_user(const std::string& id) const;

  // Likes.
  bool record_like(const std::string& user_id, const std::string& track_id, TimePoint now);
  std::vector<GenreCount> liked_genres(const std::string& user_id, TimePoint now) const;
  std::size_t live_like_count(const std::string& user_id, TimePoint now) const;
  /// Live likes per track id.
  std::map<std::string, std::size_t> like_counts(TimePoint now) const;
  std::vector<TrackLikes> top_songs(std::size_t limit, TimePoint now) const;
  std::string stats_csv(TimePoint now) const;
  void export_stats(const std::filesystem::path& destination, TimePoint now) const;

  // Ads.
  Ad add_ad(const std::string& creative_path, const std::string& target_genre,
            const std::string& click_url, TimePoint now);
  std::vector<Ad> ads() const;
  std::uint64_t record_impression(const std::string& ad_id);
  void reset_impressions(const std::string& ad_id);

  // Programs. Validation of the schedule rules lives in the scheduler.
  ScheduledProgram insert_program(ScheduledProgram program, TimePoint now);
  void transition_program(const std::string& id, ProgramState from, ProgramState to,
                          TimePoint now);
  void set_program_published(const std::string& id, bool published);
  std::vector<ScheduledProgram> programs() const;
  std::optional<ScheduledProgram> find_program(const std::string& id) const;

  CatalogData snapshot() const;

  static CatalogData load(const std::filesystem::path& dir);
  static void save(const CatalogData& data, const std::filesystem::path& dir);

 private:
  struct Session {
    std::string user_id;
    TimePoint issued;
    TimePoint last_activity;
  };

  std::string unique_id(const std::string& prefix, TimePoint now,
                        const std::vector<std::string>& taken) const;
  void write_document(const std::string& name, const std::string& body) const;

  std::filesystem::path dir_;
  CatalogPolicy policy_;
  mutable std::shared_mutex mutex_;
  CatalogData data_;

  std::mutex session_mutex_;
  std::map<std::string, Session> sessions_;
};

/// Quotes a field per RFC 4180 when it contains a comma, quote or newline.
std::string csv_field(const std::string& value);

}  // namespace wavecaster

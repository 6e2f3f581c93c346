#include "wavecaster/catalog.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/rand.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "wavecaster/mp3frame.hpp"

namespace wavecaster {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kExt = ".json";

std::string hex(const unsigned char* data, std::size_t n) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(kDigits[data[i] >> 4]);
    out.push_back(kDigits[data[i] & 0x0F]);
  }
  return out;
}

std::vector<unsigned char> unhex(const std::string& text) {
  if (text.size() % 2 != 0) throw std::invalid_argument("odd hex length");
  std::vector<unsigned char> out(text.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<unsigned char>(std::stoi(text.substr(2 * i, 2), nullptr, 16));
  }
  return out;
}

std::string random_hex(std::size_t bytes) {
  std::vector<unsigned char> buf(bytes);
  if (RAND_bytes(buf.data(), static_cast<int>(buf.size())) != 1) {
    throw CatalogError(CatalogError::Code::kIo, "random source unavailable");
  }
  return hex(buf.data(), buf.size());
}

std::vector<unsigned char> pbkdf2(const std::string& secret,
                                  const std::vector<unsigned char>& salt, int iterations) {
  std::vector<unsigned char> digest(32);
  if (PKCS5_PBKDF2_HMAC(secret.data(), static_cast<int>(secret.size()), salt.data(),
                        static_cast<int>(salt.size()), iterations, EVP_sha256(),
                        static_cast<int>(digest.size()), digest.data()) != 1) {
    throw CatalogError(CatalogError::Code::kIo, "digest failure");
  }
  return digest;
}

std::string make_credential(const std::string& secret, int iterations) {
  std::vector<unsigned char> salt(16);
  if (RAND_bytes(salt.data(), static_cast<int>(salt.size())) != 1) {
    throw CatalogError(CatalogError::Code::kIo, "random source unavailable");
  }
  auto digest = pbkdf2(secret, salt, iterations);
  return "pbkdf2-sha256$" + std::to_string(iterations) + "$" + hex(salt.data(), salt.size()) +
         "$" + hex(digest.data(), digest.size());
}

bool check_credential(const std::string& credential, const std::string& secret) {
  std::vector<std::string> parts;
  std::stringstream ss(credential);
  for (std::string part; std::getline(ss, part, '$');) parts.push_back(part);
  if (parts.size() != 4 || parts[0] != "pbkdf2-sha256") return false;
  try {
    auto salt = unhex(parts[2]);
    auto expected = unhex(parts[3]);
    auto actual = pbkdf2(secret, salt, std::stoi(parts[1]));
    return expected.size() == actual.size() &&
           CRYPTO_memcmp(expected.data(), actual.data(), actual.size()) == 0;
  } catch (const std::exception&) {
    return false;
  }
}

json opt_time(const std::optional<TimePoint>& t) {
  return t ? json(format_iso8601(*t)) : json(nullptr);
}

std::optional<TimePoint> read_opt_time(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return parse_iso8601(j.at(key).get<std::string>());
}

json to_json(const Track& t) {
  return {{"id", t.id},
          {"title", t.title},
          {"artist", t.artist},
          {"album", t.album},
          {"genre", t.genre},
          {"lang", t.language},
          {"path", t.path},
          {"added", format_iso8601(t.added)},
          {"duration_s", t.duration_s},
          {"bitrate_kbps", t.bitrate_kbps}};
}

Track track_from_json(const json& j) {
  Track t;
  t.id = j.at("id").get<std::string>();
  t.title = j.at("title").get<std::string>();
  t.artist = j.at("artist").get<std::string>();
  t.album = j.at("album").get<std::string>();
  t.genre = j.at("genre").get<std::string>();
  t.language = j.at("lang").get<std::string>();
  t.path = j.at("path").get<std::string>();
  t.added = parse_iso8601(j.at("added").get<std::string>());
  t.duration_s = j.at("duration_s").get<double>();
  t.bitrate_kbps = j.at("bitrate_kbps").get<int>();
  return t;
}

json to_json(const UserAccount& u) {
  return {{"id", u.id},
          {"login", u.login},
          {"credential", u.credential},
          {"registered", format_iso8601(u.registered)},
          {"last_seen", format_iso8601(u.last_seen)}};
}

UserAccount user_from_json(const json& j) {
  return {j.at("id").get<std::string>(), j.at("login").get<std::string>(),
          j.at("credential").get<std::string>(),
          parse_iso8601(j.at("registered").get<std::string>()),
          parse_iso8601(j.at("last_seen").get<std::string>())};
}

json to_json(const Like& l) {
  return {{"user_id", l.user_id},
          {"track_id", l.track_id},
          {"genre", l.genre},
          {"at", format_iso8601(l.at)}};
}

Like like_from_json(const json& j) {
  return {j.at("user_id").get<std::string>(), j.at("track_id").get<std::string>(),
          j.at("genre").get<std::string>(), parse_iso8601(j.at("at").get<std::string>())};
}

json to_json(const Ad& a) {
  return {{"id", a.id},
          {"path", a.creative_path},
          {"genre", a.target_genre},
          {"click_url", a.click_url},
          {"count", a.impressions}};
}

Ad ad_from_json(const json& j) {
  return {j.at("id").get<std::string>(), j.at("path").get<std::string>(),
          j.at("genre").get<std::string>(), j.at("click_url").get<std::string>(),
          j.at("count").get<std::uint64_t>()};
}

json to_json(const ScheduledProgram& p) {
  return {{"id", p.id},
          {"title", p.title},
          {"description", p.description},
          {"requested_start", format_iso8601(p.requested_start)},
          {"items", p.items},
          {"state", to_string(p.state)},
          {"published", p.published},
          {"enqueue_seq", p.enqueue_seq},
          {"started_at", opt_time(p.started_at)},
          {"finished_at", opt_time(p.finished_at)}};
}

ScheduledProgram program_from_json(const json& j) {
  ScheduledProgram p;
  p.id = j.at("id").get<std::string>();
  p.title = j.value("title", "");
  p.description = j.value("description", "");
  p.requested_start = parse_iso8601(j.at("requested_start").get<std::string>());
  p.items = j.at("items").get<std::vector<std::string>>();
  p.state = program_state_from_string(j.at("state").get<std::string>());
  p.published = j.value("published", false);
  p.enqueue_seq = j.value("enqueue_seq", std::uint64_t{0});
  p.started_at = read_opt_time(j, "started_at");
  p.finished_at = read_opt_time(j, "finished_at");
  return p;
}

template <typename T>
json array_of(const std::vector<T>& items) {
  json arr = json::array();
  for (const auto& item : items) arr.push_back(to_json(item));
  return arr;
}

std::string songs_doc(const std::vector<Track>& songs) {
  return json{{"songs", array_of(songs)}}.dump(2);
}
std::string playlist_doc(const std::vector<std::string>& items) {
  return json{{"items", items}}.dump(2);
}
std::string user_likes_doc(const std::vector<UserAccount>& users, const std::vector<Like>& likes) {
  return json{{"users", array_of(users)}, {"likes", array_of(likes)}}.dump(2);
}
std::string ads_doc(const std::vector<Ad>& ads) { return json{{"ads", array_of(ads)}}.dump(2); }
std::string programs_doc(const std::vector<ScheduledProgram>& programs, std::uint64_t next_seq) {
  return json{{"programs", array_of(programs)}, {"next_seq", next_seq}}.dump(2);
}

std::optional<json> read_doc(const fs::path& dir, const std::string& name) {
  const fs::path path = dir / (name + kExt);
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw CatalogError(CatalogError::Code::kIo, path.string() + ": " + e.what());
  }
}

bool is_live(const Like& like, TimePoint now, std::chrono::milliseconds lifetime) {
  return now - like.at <= lifetime;
}

[[noreturn]] void not_found(const std::string& what) {
  throw CatalogError(CatalogError::Code::kNotFound, what);
}

void write_documents(const fs::path& dir,
                     const std::vector<std::pair<std::string, std::string>>& docs) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::vector<std::pair<fs::path, fs::path>> staged;
  for (const auto& [name, body] : docs) {
    fs::path final_path = dir / (name + kExt);
    fs::path tmp = final_path;
    tmp += ".tmp";
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << body << '\n';
    out.close();
    if (!out) {
      for (const auto& [t, _] : staged) fs::remove(t, ec);
      fs::remove(tmp, ec);
      throw CatalogError(CatalogError::Code::kIo, "cannot write " + final_path.string());
    }
    staged.emplace_back(tmp, final_path);
  }
  for (const auto& [tmp, final_path] : staged) {
    fs::rename(tmp, final_path, ec);
    if (ec) throw CatalogError(CatalogError::Code::kIo, "cannot replace " + final_path.string());
  }
}

}  // namespace

std::string Track::display_title() const {
  return artist.empty() ? title : artist + " - " + title;
}

const char* to_string(ProgramState state) {
  switch (state) {
    case ProgramState::kPending: return "pending";
    case ProgramState::kPlaying: return "playing";
    case ProgramState::kDone: return "done";
    case ProgramState::kCancelled: return "cancelled";
  }
  return "?";
}

ProgramState program_state_from_string(const std::string& text) {
  if (text == "pending") return ProgramState::kPending;
  if (text == "playing") return ProgramState::kPlaying;
  if (text == "done") return ProgramState::kDone;
  if (text == "cancelled") return ProgramState::kCancelled;
  throw std::invalid_argument("unknown program state: " + text);
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

Catalog::Catalog(fs::path dir, CatalogPolicy policy)
    : dir_(std::move(dir)), policy_(policy), data_(load(dir_)) {}

CatalogData Catalog::load(const fs::path& dir) {
  CatalogData data;
  try {
    if (auto doc = read_doc(dir, "songs")) {
      for (const auto& j : doc->at("songs")) data.songs.push_back(track_from_json(j));
    }
    if (auto doc = read_doc(dir, "playlist")) {
      data.playlist = doc->at("items").get<std::vector<std::string>>();
    }
    if (auto doc = read_doc(dir, "user_likes")) {
      for (const auto& j : doc->at("users")) data.users.push_back(user_from_json(j));
      for (const auto& j : doc->at("likes")) data.likes.push_back(like_from_json(j));
    }
    if (auto doc = read_doc(dir, "ads")) {
      for (const auto& j : doc->at("ads")) data.ads.push_back(ad_from_json(j));
    }
    if (auto doc = read_doc(dir, "programs")) {
      for (const auto& j : doc->at("programs")) data.programs.push_back(program_from_json(j));
      data.next_program_seq = doc->value("next_seq", std::uint64_t{1});
    }
  } catch (const CatalogError&) {
    throw;
  } catch (const std::exception& e) {
    throw CatalogError(CatalogError::Code::kIo, "corrupt store in " + dir.string() + ": " + e.what());
  }
  return data;
}

void Catalog::save(const CatalogData& data, const fs::path& dir) {
  write_documents(dir, {{"songs", songs_doc(data.songs)},
                        {"playlist", playlist_doc(data.playlist)},
                        {"user_likes", user_likes_doc(data.users, data.likes)},
                        {"ads", ads_doc(data.ads)},
                        {"programs", programs_doc(data.programs, data.next_program_seq)}});
}

void Catalog::write_document(const std::string& name, const std::string& body) const {
  write_documents(dir_, {{name, body}});
}

std::string Catalog::unique_id(const std::string& prefix, TimePoint now,
                               const std::vector<std::string>& taken) const {
  const std::string base = prefix + "_" + std::to_string(to_epoch_ms(now));
  std::string candidate = base;
  for (int n = 1; std::find(taken.begin(), taken.end(), candidate) != taken.end(); ++n) {
    candidate = base + "-" + std::to_string(n);
  }
  return candidate;
}

CatalogData Catalog::snapshot() const {
  std::shared_lock lock(mutex_);
  return data_;
}

// ---- tracks ----

Track Catalog::add_track(const TrackMeta& meta, const fs::path& file, TimePoint now) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = mp3::read_file(file.string());
  } catch (const std::exception&) {
    throw CatalogError(CatalogError::Code::kIo, "unreadable file: " + file.string());
  }
  mp3::StreamInfo info;
  try {
    info = mp3::stream_info(bytes);
  } catch (const mp3::NoFramesError&) {
    throw CatalogError(CatalogError::Code::kInvalid, "no valid frame in " + file.string());
  }

  std::unique_lock lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& t : data_.songs) ids.push_back(t.id);

  Track track;
  track.id = unique_id("song", now, ids);
  track.title = meta.title;
  track.artist = meta.artist;
  track.album = meta.album;
  track.genre = meta.genre;
  track.language = meta.language;
  track.path = file.string();
  track.added = now;
  track.duration_s = info.total_duration_s;
  track.bitrate_kbps = info.nominal_bitrate_kbps;

  auto songs = data_.songs;
  songs.push_back(track);
  auto playlist = data_.playlist;
  playlist.push_back(track.id);
  write_documents(dir_, {{"songs", songs_doc(songs)}, {"playlist", playlist_doc(playlist)}});
  data_.songs = std::move(songs);
  data_.playlist = std::move(playlist);
  return track;
}

std::optional<Track> Catalog::find_track(const std::string& id) const {
  std::shared_lock lock(mutex_);
  for (const auto& t : data_.songs) {
    if (t.id == id) return t;
  }
  return std::nullopt;
}

std::vector<Track> Catalog::tracks() const {
  std::shared_lock lock(mutex_);
  return data_.songs;
}

std::vector<std::string> Catalog::playlist() const {
  std::shared_lock lock(mutex_);
  return data_.playlist;
}

// ---- users ----

UserAccount Catalog::register_user(const std::string& login, const std::string& secret,
                                   TimePoint now) {
  if (login.empty()) throw CatalogError(CatalogError::Code::kInvalid, "empty login");
  if (secret.empty()) throw CatalogError(CatalogError::Code::kInvalid, "empty secret");
  const std::string credential = make_credential(secret, policy_.pbkdf2_iterations);

  std::unique_lock lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& u : data_.users) {
    if (u.login == login) throw CatalogError(CatalogError::Code::kConflict, "login taken");
    ids.push_back(u.id);
  }
  UserAccount user{unique_id("user", now, ids), login, credential, now, now};
  auto users = data_.users;
  users.push_back(user);
  write_document("user_likes", user_likes_doc(users, data_.likes));
  data_.users = std::move(users);
  return user;
}

std::string Catalog::authenticate(const std::string& login_or_id, const std::string& secret,
                                  TimePoint now) {
  std::optional<UserAccount> user;
  {
    std::shared_lock lock(mutex_);
    for (const auto& u : data_.users) {
      if (u.login == login_or_id || u.id == login_or_id) user = u;
    }
  }
  if (!user || !check_credential(user->credential, secret)) {
    throw CatalogError(CatalogError::Code::kUnauthorized, "invalid login or secret");
  }
  {
    std::unique_lock lock(mutex_);
    auto users = data_.users;
    for (auto& u : users) {
      if (u.id == user->id) u.last_seen = now;
    }
    write_document("user_likes", user_likes_doc(users, data_.likes));
    data_.users = std::move(users);
  }
  std::string token = random_hex(24);
  std::lock_guard lock(session_mutex_);
  // Lazy expiry of idle sessions.
  std::erase_if(sessions_, [&](const auto& entry) {
    return now - entry.second.last_activity > policy_.session_idle;
  });
  sessions_[token] = Session{user->id, now, now};
  return token;
}

std::string Catalog::validate_session(const std::string& token, TimePoint now) {
  std::lock_guard lock(session_mutex_);
  auto it = sessions_.find(token);
  if (it == sessions_.end()) {
    throw CatalogError(CatalogError::Code::kUnauthorized, "unknown session");
  }
  if (now - it->second.last_activity > policy_.session_idle) {
    sessions_.erase(it);
    throw CatalogError(CatalogError::Code::kUnauthorized, "session expired");
  }
  it->second.last_activity = std::max(it->second.last_activity, now);
  return it->second.user_id;
}

std::optional<UserAccount> Catalog::find_user(const std::string& id) const {
  std::shared_lock lock(mutex_);
  for (const auto& u : data_.users) {
    if (u.id == id) return u;
  }
  return std::nullopt;
}

// ---- likes ----

bool Catalog::record_like(const std::string& user_id, const std::string& track_id,
                          TimePoint now) {
  std::unique_lock lock(mutex_);
  if (std::none_of(data_.users.begin(), data_.users.end(),
                   [&](const UserAccount& u) { return u.id == user_id; })) {
    not_found("unknown user " + user_id);
  }
  auto track = std::find_if(data_.songs.begin(), data_.songs.end(),
                            [&](const Track& t) { return t.id == track_id; });
  if (track == data_.songs.end()) not_found("unknown track " + track_id);

  for (const auto& like : data_.likes) {
    if (like.user_id == user_id && like.track_id == track_id &&
        now - like.at < policy_.like_cooldown) {
      return false;
    }
  }
  std::vector<Like> likes;
  likes.reserve(data_.likes.size() + 1);
  for (const auto& like : data_.likes) {
    if (is_live(like, now, policy_.like_lifetime)) likes.push_back(like);
  }
  likes.push_back(Like{user_id, track_id, track->genre, now});
  write_document("user_likes", user_likes_doc(data_.users, likes));
  data_.likes = std::move(likes);
  return true;
}

std::vector<GenreCount> Catalog::liked_genres(const std::string& user_id, TimePoint now) const {
  std::shared_lock lock(mutex_);
  if (std::none_of(data_.users.begin(), data_.users.end(),
                   [&](const UserAccount& u) { return u.id == user_id; })) {
    not_found("unknown user " + user_id);
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& like : data_.likes) {
    if (like.user_id == user_id && is_live(like, now, policy_.like_lifetime)) {
      ++counts[like.genre];
    }
  }
  std::vector<GenreCount> out;
  for (const auto& [genre, count] : counts) out.push_back({genre, count});
  // counts is keyed by genre, so a stable sort keeps ties alphabetical.
  std::stable_sort(out.begin(), out.end(),
                   [](const GenreCount& a, const GenreCount& b) { return a.count > b.count; });
  return out;
}

std::size_t Catalog::live_like_count(const std::string& user_id, TimePoint now) const {
  std::shared_lock lock(mutex_);
  return static_cast<std::size_t>(
      std::count_if(data_.likes.begin(), data_.likes.end(), [&](const Like& l) {
        return l.user_id == user_id && is_live(l, now, policy_.like_lifetime);
      }));
}

std::map<std::string, std::size_t> Catalog::like_counts(TimePoint now) const {
  std::shared_lock lock(mutex_);
  std::map<std::string, std::size_t> counts;
  for (const auto& like : data_.likes) {
    if (is_live(like, now, policy_.like_lifetime)) ++counts[like.track_id];
  }
  return counts;
}

std::vector<TrackLikes> Catalog::top_songs(std::size_t limit, TimePoint now) const {
  const auto counts = like_counts(now);
  std::vector<TrackLikes> out;
  {
    std::shared_lock lock(mutex_);
    for (const auto& t : data_.songs) {
      auto it = counts.find(t.id);
      if (it != counts.end() && it->second > 0) out.push_back({t, it->second});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const TrackLikes& a, const TrackLikes& b) {
    if (a.likes != b.likes) return a.likes > b.likes;
    return a.track.title < b.track.title;
  });
  if (limit > 0 && out.size() > limit) out.resize(limit);
  return out;
}

std::string Catalog::stats_csv(TimePoint now) const {
  std::string out = "title,genre,album,artist,likes\n";
  for (const auto& [track, likes] : top_songs(0, now)) {
    out += csv_field(track.title) + ',' + csv_field(track.genre) + ',' +
           csv_field(track.album) + ',' + csv_field(track.artist) + ',' +
           std::to_string(likes) + '\n';
  }
  return out;
}

void Catalog::export_stats(const fs::path& destination, TimePoint now) const {
  const std::string body = stats_csv(now);
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  out << body;
  out.close();
  if (!out) throw CatalogError(CatalogError::Code::kIo, "cannot write " + destination.string());
}

// ---- ads ----

Ad Catalog::add_ad(const std::string& creative_path, const std::string& target_genre,
                   const std::string& click_url, TimePoint now) {
  if (creative_path.empty()) throw CatalogError(CatalogError::Code::kInvalid, "empty creative");
  std::unique_lock lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& a : data_.ads) ids.push_back(a.id);
  Ad ad{unique_id("ad", now, ids), creative_path, target_genre, click_url, 0};
  auto ads = data_.ads;
  ads.push_back(ad);
  write_document("ads", ads_doc(ads));
  data_.ads = std::move(ads);
  return ad;
}

std::vector<Ad> Catalog::ads() const {
  std::shared_lock lock(mutex_);
  return data_.ads;
}

std::uint64_t Catalog::record_impression(const std::string& ad_id) {
  std::unique_lock lock(mutex_);
  auto ads = data_.ads;
  auto it = std::find_if(ads.begin(), ads.end(), [&](const Ad& a) { return a.id == ad_id; });
  if (it == ads.end()) not_found("unknown ad " + ad_id);
  const std::uint64_t count = ++it->impressions;
  write_document("ads", ads_doc(ads));
  data_.ads = std::move(ads);
  return count;
}

void Catalog::reset_impressions(const std::string& ad_id) {
  std::unique_lock lock(mutex_);
  auto ads = data_.ads;
  auto it = std::find_if(ads.begin(), ads.end(), [&](const Ad& a) { return a.id == ad_id; });
  if (it == ads.end()) not_found("unknown ad " + ad_id);
  it->impressions = 0;
  write_document("ads", ads_doc(ads));
  data_.ads = std::move(ads);
}

// ---- programs ----

ScheduledProgram Catalog::insert_program(ScheduledProgram program, TimePoint now) {
  std::unique_lock lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& p : data_.programs) ids.push_back(p.id);
  program.id = unique_id("program", now, ids);
  program.enqueue_seq = data_.next_program_seq;
  auto programs = data_.programs;
  programs.push_back(program);
  write_document("programs", programs_doc(programs, data_.next_program_seq + 1));
  data_.programs = std::move(programs);
  ++data_.next_program_seq;
  return program;
}

void Catalog::transition_program(const std::string& id, ProgramState from, ProgramState to,
                                 TimePoint now) {
  std::unique_lock lock(mutex_);
  auto programs = data_.programs;
  auto it = std::find_if(programs.begin(), programs.end(),
                         [&](const ScheduledProgram& p) { return p.id == id; });
  if (it == programs.end()) not_found("unknown program " + id);
  if (it->state != from) {
    throw CatalogError(CatalogError::Code::kConflict,
                       "program " + id + " is " + to_string(it->state) + ", not " +
                           to_string(from));
  }
  it->state = to;
  if (to == ProgramState::kPlaying) it->started_at = now;
  if (to == ProgramState::kDone || to == ProgramState::kCancelled) it->finished_at = now;
  write_document("programs", programs_doc(programs, data_.next_program_seq));
  data_.programs = std::move(programs);
}

void Catalog::set_program_published(const std::string& id, bool published) {
  std::unique_lock lock(mutex_);
  auto programs = data_.programs;
  auto it = std::find_if(programs.begin(), programs.end(),
                         [&](const ScheduledProgram& p) { return p.id == id; });
  if (it == programs.end()) not_found("unknown program " + id);
  it->published = published;
  write_document("programs", programs_doc(programs, data_.next_program_seq));
  data_.programs = std::move(programs);
}

std::vector<ScheduledProgram> Catalog::programs() const {
  std::shared_lock lock(mutex_);
  return data_.programs;
}

std::optional<ScheduledProgram> Catalog::find_program(const std::string& id) const {
  std::shared_lock lock(mutex_);
  for (const auto& p : data_.programs) {
    if (p.id == id) return p;
  }
  return std::nullopt;
}

}  // namespace wavecaster

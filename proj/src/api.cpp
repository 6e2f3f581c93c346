#include "wavecaster/api.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "wavecaster/adserve.hpp"
#include "wavecaster/mp3frame.hpp"

namespace wavecaster::api {

namespace fs = std::filesystem;
using json = nlohmann::json;
using http::Request;
using http::Response;

namespace {

Response json_response(int status, const json& body) {
  return Response::text(status, body.dump() + "\n", "application/json");
}

Response error(int status, const std::string& message) {
  return json_response(status, {{"error", message}});
}

int status_for(CatalogError::Code code) {
  switch (code) {
    case CatalogError::Code::kNotFound: return 404;
    case CatalogError::Code::kInvalid: return 422;
    case CatalogError::Code::kConflict: return 409;
    case CatalogError::Code::kUnauthorized: return 401;
    case CatalogError::Code::kIo: return 500;
  }
  return 500;
}

/// Thrown inside handlers to short-circuit with an HTTP status.
struct HttpError {
  int status;
  std::string message;
};

json parse_json_body(const Request& request) {
  json body = json::parse(request.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) throw HttpError{400, "body must be a JSON object"};
  return body;
}

std::string string_field(const json& body, const char* name, bool required = true) {
  auto it = body.find(name);
  if (it == body.end() || it->is_null()) {
    if (required) throw HttpError{400, std::string("missing field ") + name};
    return {};
  }
  if (!it->is_string()) throw HttpError{400, std::string("field ") + name + " must be a string"};
  return it->get<std::string>();
}

json track_json(const Track& t) {
  return {{"id", t.id},         {"title", t.title},
          {"artist", t.artist}, {"album", t.album},
          {"genre", t.genre},   {"language", t.language},
          {"duration_s", t.duration_s}, {"bitrate_kbps", t.bitrate_kbps},
          {"added", format_iso8601(t.added)}};
}

json ad_json(const Ad& ad) {
  return {{"id", ad.id},
          {"creative_url", "/api/ads/" + ad.id + "/creative"},
          {"target_genre", ad.target_genre},
          {"click_url", ad.click_url},
          {"impressions", ad.impressions}};
}

json program_json(const ScheduledProgram& p) {
  json j = {{"id", p.id},
            {"title", p.title},
            {"description", p.description},
            {"start", format_iso8601(p.requested_start)},
            {"items", p.items},
            {"state", to_string(p.state)},
            {"published", p.published}};
  j["started_at"] = p.started_at ? json(format_iso8601(*p.started_at)) : json(nullptr);
  j["finished_at"] = p.finished_at ? json(format_iso8601(*p.finished_at)) : json(nullptr);
  return j;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : path) {
    if (c == '/') {
      if (!current.empty()) parts.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) parts.push_back(std::move(current));
  return parts;
}

std::string content_type_for(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".gif") return "image/gif";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".mp3") return "audio/mpeg";
  return "application/octet-stream";
}

std::optional<std::string> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

/// Audio frames of every item, ID3 tags dropped.
std::string program_audio_bytes(const Catalog& catalog, const ScheduledProgram& program) {
  std::string out;
  for (const auto& id : program.items) {
    auto track = catalog.find_track(id);
    if (!track) continue;
    std::vector<std::uint8_t> bytes;
    try {
      bytes = mp3::read_file(track->path);
    } catch (const std::exception&) {
      continue;
    }
    for (const auto& frame : mp3::iterate_frames(bytes)) {
      out.append(reinterpret_cast<const char*>(frame.bytes.data()), frame.bytes.size());
    }
  }
  return out;
}

std::string sanitize_extension(const std::optional<std::string>& filename,
                               const std::string& fallback) {
  if (!filename) return fallback;
  std::string ext = fs::path(*filename).extension().string();
  if (ext.size() < 2 || ext.size() > 6) return fallback;
  for (char c : ext.substr(1)) {
    if (!std::isalnum(static_cast<unsigned char>(c))) return fallback;
  }
  return ext;
}

}  // namespace

std::string xml_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default:
        // Control characters other than tab/newline are not allowed in XML 1.0.
        if (static_cast<unsigned char>(c) < 0x20 && c != '\t' && c != '\n' && c != '\r') break;
        out.push_back(c);
    }
  }
  return out;
}

std::string build_podcast_feed(
    const std::vector<ScheduledProgram>& programs, const FeedChannel& channel,
    const std::function<std::uint64_t(const ScheduledProgram&)>& enclosure_length) {
  std::vector<const ScheduledProgram*> items;
  for (const auto& p : programs) {
    if (p.published && p.state == ProgramState::kDone) items.push_back(&p);
  }
  auto published_at = [](const ScheduledProgram* p) {
    return p->finished_at.value_or(p->requested_start);
  };
  std::sort(items.begin(), items.end(), [&](const auto* a, const auto* b) {
    if (published_at(a) != published_at(b)) return published_at(a) > published_at(b);
    return a->id < b->id;
  });

  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<rss version=\"2.0\">\n<channel>\n";
  out += "  <title>" + xml_escape(channel.title) + "</title>\n";
  out += "  <link>" + xml_escape(channel.link.empty() ? "http://localhost/" : channel.link) +
         "</link>\n";
  out += "  <description>" + xml_escape(channel.description) + "</description>\n";
  if (!channel.language.empty()) {
    out += "  <language>" + xml_escape(channel.language) + "</language>\n";
  }
  if (!items.empty()) {
    out += "  <lastBuildDate>" + format_rfc822(published_at(items.front())) +
           "</lastBuildDate>\n";
  }
  for (const auto* p : items) {
    const std::string url = channel.link + "/api/programs/" + p->id + "/audio";
    const std::uint64_t length = enclosure_length ? enclosure_length(*p) : 0;
    out += "  <item>\n";
    out += "    <title>" + xml_escape(p->title.empty() ? p->id : p->title) + "</title>\n";
    out += "    <description>" + xml_escape(p->description) + "</description>\n";
    out += "    <pubDate>" + format_rfc822(published_at(p)) + "</pubDate>\n";
    out += "    <enclosure url=\"" + xml_escape(url) + "\" length=\"" + std::to_string(length) +
           "\" type=\"audio/mpeg\"/>\n";
    out += "    <guid isPermaLink=\"false\">" + xml_escape(p->id) + "</guid>\n";
    out += "  </item>\n";
  }
  out += "</channel>\n</rss>\n";
  return out;
}

// ---------------------------------------------------------------------------

ApiService::ApiService(Catalog& catalog, ApiConfig config)
    : catalog_(catalog), config_(std::move(config)), clock_([] { return now_ms(); }) {
  if (config_.media_dir.empty()) config_.media_dir = catalog_.dir() / "media";
  if (config_.draft_dir.empty()) config_.draft_dir = catalog_.dir() / "drafts";
}

Response ApiService::route(const Request& request) {
  try {
    return dispatch(request);
  } catch (const HttpError& e) {
    return error(e.status, e.message);
  } catch (const CatalogError& e) {
    return error(status_for(e.code()), e.what());
  } catch (const scheduler::SynthesisError& e) {
    return error(502, e.what());
  } catch (const std::exception& e) {
    spdlog::error("{} {}: {}", request.method, request.path, e.what());
    return error(500, "internal error");
  } catch (...) {
    return error(500, "internal error");
  }
}

std::string ApiService::require_user(const Request& request) {
  auto auth = request.header("Authorization");
  const std::string prefix = "Bearer ";
  if (!auth || auth->size() <= prefix.size() || auth->compare(0, prefix.size(), prefix) != 0) {
    throw HttpError{401, "bearer token required"};
  }
  try {
    return catalog_.validate_session(auth->substr(prefix.size()), clock_());
  } catch (const CatalogError&) {
    throw HttpError{401, "invalid or expired token"};
  }
}

Response ApiService::dispatch(const Request& request) {
  const auto parts = split_path(request.path);
  const std::string& m = request.method;
  const std::size_t n = parts.size();

  if (n >= 1 && parts[0] == "console") {
    if (m != "GET") return error(405, "method not allowed");
    std::string relative;
    for (std::size_t i = 1; i < n; ++i) relative += (i > 1 ? "/" : "") + parts[i];
    return console_asset(relative.empty() ? "index.html" : relative);
  }
  if (n < 2 || parts[0] != "api") return error(404, "not found");

  const std::string& r = parts[1];
  auto method_is = [&](const char* want) {
    if (m != want) throw HttpError{405, "method not allowed"};
  };

  if (n == 2) {
    if (r == "register") return method_is("POST"), register_user(request);
    if (r == "login") return method_is("POST"), login(request);
    if (r == "like") return method_is("POST"), like(request);
    if (r == "now-playing") return method_is("GET"), now_playing();
    if (r == "stats.csv") return method_is("GET"), require_user(request), stats_csv();
    if (r == "stats") return method_is("GET"), require_user(request), stats_json(request);
    if (r == "feed.rss") return method_is("GET"), feed();
    if (r == "tracks") {
      require_user(request);
      if (m == "GET") {
        json list = json::array();
        for (const auto& t : catalog_.tracks()) list.push_back(track_json(t));
        return json_response(200, {{"tracks", list}});
      }
      return method_is("POST"), upload_track(request);
    }
    if (r == "ads") {
      if (m == "GET") return list_ads(request);
      method_is("POST");
      require_user(request);
      return upload_ad(request);
    }
    if (r == "programs") {
      require_user(request);
      if (m == "GET") return list_programs();
      return method_is("POST"), create_program(request);
    }
    if (r == "announce") return method_is("POST"), require_user(request), announce(request);
  }
  if (n == 3 && r == "programs") {
    if (m == "DELETE") return require_user(request), cancel_program(parts[2]);
    if (m == "GET") {
      require_user(request);
      auto p = catalog_.find_program(parts[2]);
      if (!p) return error(404, "unknown program");
      return json_response(200, program_json(*p));
    }
    return error(405, "method not allowed");
  }
  if (n == 4 && r == "programs") {
    if (parts[3] == "audio") return method_is("GET"), program_audio(parts[2]);
    if (parts[3] == "publish") {
      return method_is("POST"), require_user(request), publish_program(request, parts[2]);
    }
  }
  if (n == 4 && r == "ads") {
    if (parts[3] == "creative") return method_is("GET"), ad_creative(parts[2]);
    if (parts[3] == "impression") return method_is("POST"), require_user(request), impression(parts[2]);
    if (parts[3] == "reset") return method_is("POST"), require_user(request), reset_impressions(parts[2]);
  }
  if (n == 4 && r == "announce") {
    if (parts[3] == "commit") return method_is("POST"), require_user(request), commit_draft(parts[2]);
    if (parts[3] == "audio") return method_is("GET"), require_user(request), draft_audio(parts[2]);
  }
  return error(404, "not found");
}

Response ApiService::register_user(const Request& request) {
  json body = parse_json_body(request);
  auto user = catalog_.register_user(string_field(body, "login"), string_field(body, "password"),
                                     clock_());
  return json_response(201, {{"user_id", user.id}, {"login", user.login}});
}

Response ApiService::login(const Request& request) {
  json body = parse_json_body(request);
  const auto now = clock_();
  std::string token =
      catalog_.authenticate(string_field(body, "login"), string_field(body, "password"), now);
  return json_response(200, {{"token", token}, {"user_id", catalog_.validate_session(token, now)}});
}

Response ApiService::like(const Request& request) {
  const std::string user = require_user(request);
  json body = parse_json_body(request);
  bool accepted = catalog_.record_like(user, string_field(body, "track_id"), clock_());
  return json_response(200, {{"accepted", accepted}});
}

Response ApiService::list_ads(const Request& request) {
  const std::string user = require_user(request);
  const auto now = clock_();
  std::vector<std::string> liked;
  for (const auto& g : catalog_.liked_genres(user, now)) liked.push_back(g.genre);
  const auto ads = catalog_.ads();
  const auto selection = adserve::select_ads(ads, liked);
  json list = json::array();
  for (const auto& id : selection) {
    auto it = std::find_if(ads.begin(), ads.end(), [&](const Ad& a) { return a.id == id; });
    if (it != ads.end()) list.push_back(ad_json(*it));
  }
  return json_response(200, {{"liked_genres", liked}, {"ads", list}});
}

Response ApiService::now_playing() {
  std::optional<scheduler::NowPlaying> np;
  if (now_playing_) np = now_playing_();
  if (!np) return json_response(200, {{"playing", false}, {"stream_url", config_.stream_url}});
  return json_response(200, {{"playing", true},
                             {"track_id", np->track.id},
                             {"title", np->track.title},
                             {"artist", np->track.artist},
                             {"album", np->track.album},
                             {"genre", np->track.genre},
                             {"display_title", np->track.display_title()},
                             {"program_id", np->program_id},
                             {"started", format_iso8601(np->started)},
                             {"stream_url", config_.stream_url}});
}

Response ApiService::stats_csv() {
  auto r = Response::text(200, catalog_.stats_csv(clock_()), "text/csv; charset=utf-8");
  r.headers["Content-Disposition"] = "attachment; filename=\"stats.csv\"";
  return r;
}

Response ApiService::stats_json(const Request& request) {
  std::size_t limit = 0;
  if (auto it = request.query.find("limit"); it != request.query.end()) {
    try {
      limit = static_cast<std::size_t>(std::stoul(it->second));
    } catch (const std::exception&) {
      throw HttpError{400, "limit must be a number"};
    }
  }
  json list = json::array();
  for (const auto& entry : catalog_.top_songs(limit, clock_())) {
    json t = track_json(entry.track);
    t["likes"] = entry.likes;
    list.push_back(std::move(t));
  }
  return json_response(200, {{"top", list}});
}

Response ApiService::feed() {
  auto body = build_podcast_feed(catalog_.programs(), config_.channel,
                                 [this](const ScheduledProgram& p) { return program_bytes(p); });
  return Response::text(200, std::move(body), "application/rss+xml; charset=utf-8");
}

fs::path ApiService::store_upload(const std::string& stem, const std::string& data,
                                  const std::string& extension) {
  fs::create_directories(config_.media_dir);
  static std::atomic<std::uint64_t> counter{0};
  const fs::path path = config_.media_dir / (stem + "_" + std::to_string(to_epoch_ms(clock_())) +
                                             "_" + std::to_string(counter++) + extension);
  std::ofstream out(path, std::ios::binary);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw CatalogError(CatalogError::Code::kIo, "cannot store upload");
  return path;
}

namespace {

struct Form {
  std::map<std::string, std::string> fields;
  std::optional<http::MultipartPart> file;
};

Form parse_form(const Request& request) {
  auto type = request.header("Content-Type");
  if (!type) throw HttpError{415, "multipart/form-data required"};
  auto boundary = http::multipart_boundary(*type);
  if (!boundary) throw HttpError{415, "multipart/form-data required"};
  std::vector<http::MultipartPart> parts;
  try {
    parts = http::parse_multipart(request.body, *boundary);
  } catch (const std::invalid_argument& e) {
    throw HttpError{400, e.what()};
  }
  Form form;
  for (auto& part : parts) {
    if (part.name == "file") {
      form.file = std::move(part);
    } else {
      form.fields[part.name] = std::move(part.data);
    }
  }
  return form;
}

std::string form_field(const Form& form, const std::string& name) {
  auto it = form.fields.find(name);
  return it == form.fields.end() ? std::string{} : it->second;
}

}  // namespace

Response ApiService::upload_track(const Request& request) {
  Form form = parse_form(request);
  if (!form.file || form.file->data.empty()) throw HttpError{400, "missing file part"};
  const fs::path path = store_upload("song", form.file->data, ".mp3");
  TrackMeta meta{form_field(form, "title"), form_field(form, "artist"), form_field(form, "album"),
                 form_field(form, "genre"), form_field(form, "language")};
  if (meta.title.empty() && form.file->filename) {
    meta.title = fs::path(*form.file->filename).stem().string();
  }
  try {
    return json_response(201, track_json(catalog_.add_track(meta, path, clock_())));
  } catch (...) {
    std::error_code ec;
    fs::remove(path, ec);
    throw;
  }
}

Response ApiService::upload_ad(const Request& request) {
  Form form = parse_form(request);
  if (!form.file || form.file->data.empty()) throw HttpError{400, "missing file part"};
  const std::string genre = form_field(form, "target_genre");
  if (genre.empty()) throw HttpError{400, "missing field target_genre"};
  const fs::path path =
      store_upload("ad", form.file->data, sanitize_extension(form.file->filename, ".bin"));
  try {
    return json_response(
        201, ad_json(catalog_.add_ad(path.string(), genre, form_field(form, "click_url"), clock_())));
  } catch (...) {
    std::error_code ec;
    fs::remove(path, ec);
    throw;
  }
}

Response ApiService::ad_creative(const std::string& id) {
  for (const auto& ad : catalog_.ads()) {
    if (ad.id != id) continue;
    auto bytes = read_bytes(ad.creative_path);
    if (!bytes) return error(404, "creative missing");
    return Response::text(200, std::move(*bytes), content_type_for(ad.creative_path));
  }
  return error(404, "unknown ad");
}

Response ApiService::impression(const std::string& id) {
  return json_response(200, {{"impressions", catalog_.record_impression(id)}});
}

Response ApiService::reset_impressions(const std::string& id) {
  catalog_.reset_impressions(id);
  return json_response(200, {{"impressions", 0}});
}

Response ApiService::create_program(const Request& request) {
  json body = parse_json_body(request);
  auto items_it = body.find("items");
  if (items_it == body.end() || !items_it->is_array()) throw HttpError{400, "items must be an array"};
  std::vector<std::string> items;
  for (const auto& item : *items_it) {
    if (!item.is_string()) throw HttpError{400, "items must be track ids"};
    items.push_back(item.get<std::string>());
  }
  TimePoint start;
  try {
    start = parse_iso8601(string_field(body, "start"));
  } catch (const std::invalid_argument& e) {
    throw HttpError{400, e.what()};
  }
  const auto now = clock_();
  auto program = scheduler::enqueue_program(catalog_, items, start, now,
                                            string_field(body, "title", false),
                                            string_field(body, "description", false));
  auto published = body.find("published");
  if (published != body.end() && published->is_boolean() && published->get<bool>()) {
    catalog_.set_program_published(program.id, true);
    program.published = true;
  }
  return json_response(201, program_json(program));
}

Response ApiService::list_programs() {
  json list = json::array();
  for (const auto& p : catalog_.programs()) list.push_back(program_json(p));
  return json_response(200, {{"programs", list}});
}

Response ApiService::cancel_program(const std::string& id) {
  scheduler::cancel_program(catalog_, id, clock_());
  return json_response(200, {{"id", id}, {"state", "cancelled"}});
}

Response ApiService::publish_program(const Request& request, const std::string& id) {
  bool published = true;
  if (!request.body.empty()) {
    json body = parse_json_body(request);
    auto it = body.find("published");
    if (it != body.end()) {
      if (!it->is_boolean()) throw HttpError{400, "published must be a boolean"};
      published = it->get<bool>();
    }
  }
  catalog_.set_program_published(id, published);
  return json_response(200, {{"id", id}, {"published", published}});
}

std::uint64_t ApiService::program_bytes(const ScheduledProgram& program) const {
  return program_audio_bytes(catalog_, program).size();
}

Response ApiService::program_audio(const std::string& id) {
  auto program = catalog_.find_program(id);
  if (!program) return error(404, "unknown program");
  return Response::text(200, program_audio_bytes(catalog_, *program), "audio/mpeg");
}

Response ApiService::announce(const Request& request) {
  if (!synthesizer_) return error(503, "no synthesizer configured");
  json body = parse_json_body(request);
  std::string voice = string_field(body, "voice", false);
  if (voice.empty()) voice = config_.default_voice;
  const std::string text = string_field(body, "text");
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) throw HttpError{400, "empty text"};
  auto draft = scheduler::make_announcement(text, voice, *synthesizer_, config_.draft_dir);

  auto commit = body.find("commit");
  if (commit != body.end() && commit->is_boolean() && commit->get<bool>()) {
    auto track = scheduler::commit_announcement(catalog_, draft, clock_());
    return json_response(201, {{"track", track_json(track)}});
  }
  std::string id;
  {
    std::lock_guard lock(drafts_mutex_);
    id = "draft_" + std::to_string(next_draft_++);
    drafts_[id] = draft;
  }
  return json_response(200, {{"draft_id", id},
                              {"duration_s", draft.info.total_duration_s},
                              {"preview_url", "/api/announce/" + id + "/audio"}});
}

Response ApiService::commit_draft(const std::string& id) {
  scheduler::AnnouncementDraft draft;
  {
    std::lock_guard lock(drafts_mutex_);
    auto it = drafts_.find(id);
    if (it == drafts_.end()) return error(404, "unknown draft");
    draft = it->second;
    drafts_.erase(it);
  }
  auto track = scheduler::commit_announcement(catalog_, draft, clock_());
  return json_response(201, {{"track", track_json(track)}});
}

Response ApiService::draft_audio(const std::string& id) {
  fs::path path;
  {
    std::lock_guard lock(drafts_mutex_);
    auto it = drafts_.find(id);
    if (it == drafts_.end()) return error(404, "unknown draft");
    path = it->second.path;
  }
  auto bytes = read_bytes(path);
  if (!bytes) return error(404, "draft audio missing");
  return Response::text(200, std::move(*bytes), "audio/mpeg");
}

Response ApiService::console_asset(const std::string& relative) {
  // The console reads its bootstrap settings from config.json; an installed
  // file wins over the generated one.
  if (relative == "config.json" &&
      (config_.console_dir.empty() || !fs::exists(config_.console_dir / relative))) {
    return json_response(200, {{"api_base", config_.channel.link},
                               {"stream_url", config_.stream_url},
                               {"poll_interval_ms", config_.poll_interval_ms},
                               {"rotation_interval_ms", config_.rotation_interval_ms}});
  }
  if (config_.console_dir.empty()) return error(404, "console not installed");
  const fs::path rel(relative);
  for (const auto& piece : rel) {
    if (piece == ".." || piece.string().empty()) return error(404, "not found");
  }
  if (rel.is_absolute()) return error(404, "not found");
  const fs::path full = config_.console_dir / rel;
  auto bytes = read_bytes(full);
  if (!bytes || fs::is_directory(full)) return error(404, "not found");
  return Response::text(200, std::move(*bytes), content_type_for(full));
}

}  // namespace wavecaster::api

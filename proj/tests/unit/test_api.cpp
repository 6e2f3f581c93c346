#include <gtest/gtest.h>

#include <sys/socket.h>

#include <fstream>
#include <random>

#include <json.hpp>

#include "rss_check.hpp"
#include "test_support.hpp"
#include "wavecaster/api.hpp"

namespace wavecaster::api {
namespace {

using namespace std::chrono_literals;
using json = nlohmann::json;
using testing::fixture;
using testing::TempDir;

const TimePoint kT0 = from_epoch_ms((20744LL * 86400 + 12 * 3600 + 41) * 1000);

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

http::Request make_request(const std::string& method, const std::string& target,
                           const std::string& body = {}, const std::string& token = {},
                           const std::string& content_type = "application/json") {
  std::string raw = method + " " + target + " HTTP/1.1\r\nHost: test\r\n";
  if (!token.empty()) raw += "Authorization: Bearer " + token + "\r\n";
  if (!body.empty()) raw += "Content-Type: " + content_type + "\r\n";
  raw += "Content-Length: " + std::to_string(body.size()) + "\r\n\r\n" + body;
  http::Request r;
  EXPECT_EQ(http::parse_request(raw, r), http::ParseStatus::kComplete) << raw;
  return r;
}

std::string multipart(const std::string& boundary, const std::map<std::string, std::string>& fields,
                      const std::string& filename, const std::string& file) {
  std::string out;
  for (const auto& [k, v] : fields) {
    out += "--" + boundary + "\r\nContent-Disposition: form-data; name=\"" + k + "\"\r\n\r\n" + v + "\r\n";
  }
  out += "--" + boundary + "\r\nContent-Disposition: form-data; name=\"file\"; filename=\"" + filename +
         "\"\r\nContent-Type: application/octet-stream\r\n\r\n" + file + "\r\n";
  out += "--" + boundary + "--\r\n";
  return out;
}

class ApiTest : public ::testing::Test {
 protected:
  ApiTest() {
    CatalogPolicy policy;
    policy.pbkdf2_iterations = 1000;
    catalog_ = std::make_unique<Catalog>(dir_ / "library", policy);
    ApiConfig config;
    config.stream_url = "http://radio.test:8000/";
    config.channel.link = "http://radio.test:8089";
    config.channel.title = "Radio Test";
    config.console_dir = dir_ / "console";
    std::filesystem::create_directories(config.console_dir);
    std::ofstream(config.console_dir / "index.html") << "<html>console</html>";
    std::ofstream(dir_ / "secret.txt") << "do not serve";
    api_ = std::make_unique<ApiService>(*catalog_, config);
    api_->set_clock([this] { return now_; });
  }

  http::Response call(const std::string& method, const std::string& target, const std::string& body = {},
                      const std::string& token = {}) {
    return api_->route(make_request(method, target, body, token));
  }
  json call_json(const std::string& method, const std::string& target, int expected_status,
                 const std::string& body = {}, const std::string& token = {}) {
    auto r = call(method, target, body, token);
    EXPECT_EQ(r.status, expected_status) << method << " " << target << ": " << r.body;
    return json::parse(r.body, nullptr, false);
  }

  std::string login(const std::string& who = "ala") {
    call_json("POST", "/api/register", 201, json{{"login", who}, {"password", "x"}}.dump());
    return call_json("POST", "/api/login", 200, json{{"login", who}, {"password", "x"}}.dump())["token"];
  }

  Track add_track(const std::string& title, const std::string& genre) {
    now_ += 1ms;
    return catalog_->add_track({title, "Zespol", "Album", genre, "pl"}, fixture("short_a.mp3"), now_);
  }

  TempDir dir_;
  TimePoint now_ = kT0;
  std::unique_ptr<Catalog> catalog_;
  std::unique_ptr<ApiService> api_;
};

TEST_F(ApiTest, RegisterAndLogin) {
  auto reg = call_json("POST", "/api/register", 201, R"({"login":"ala","password":"x"})");
  EXPECT_EQ(reg["login"], "ala");
  call_json("POST", "/api/register", 409, R"({"login":"ala","password":"y"})");
  call_json("POST", "/api/register", 400, R"({"login":"ola"})");
  call_json("POST", "/api/register", 400, "not json");
  auto ok = call_json("POST", "/api/login", 200, R"({"login":"ala","password":"x"})");
  EXPECT_EQ(ok["user_id"], reg["user_id"]);
  EXPECT_FALSE(ok["token"].get<std::string>().empty());
  call_json("POST", "/api/login", 401, R"({"login":"ala","password":"wrong"})");
}

TEST_F(ApiTest, LikeAcceptedThenDuplicate) {
  auto token = login();
  auto t = add_track("Piosenka", "Rock");
  const std::string body = json{{"track_id", t.id}}.dump();
  EXPECT_EQ(call_json("POST", "/api/like", 200, body, token)["accepted"], true);
  now_ += 1h;
  EXPECT_EQ(call_json("POST", "/api/like", 200, body, token)["accepted"], false);
  call_json("POST", "/api/like", 404, R"({"track_id":"song_0"})", token);
  call_json("POST", "/api/like", 401, body);
}

TEST_F(ApiTest, AdsRequireToken) {
  EXPECT_EQ(call("GET", "/api/ads").status, 401);
  EXPECT_EQ(call("GET", "/api/ads", {}, "bogus").status, 401);
}

TEST_F(ApiTest, AdsFollowLikedGenres) {
  auto token = login();
  auto rock = add_track("R", "Rock");
  catalog_->add_ad("/nonexistent/a.gif", "Rock", "http://a.test", now_);
  now_ += 1ms;
  catalog_->add_ad("/nonexistent/b.gif", "POP", "http://b.test", now_);

  auto untargeted = call_json("GET", "/api/ads", 200, {}, token);
  EXPECT_EQ(untargeted["ads"].size(), 2u);
  EXPECT_TRUE(untargeted["liked_genres"].empty());

  call_json("POST", "/api/like", 200, json{{"track_id", rock.id}}.dump(), token);
  auto targeted = call_json("GET", "/api/ads", 200, {}, token);
  ASSERT_EQ(targeted["ads"].size(), 1u);
  EXPECT_EQ(targeted["ads"][0]["target_genre"], "Rock");
  EXPECT_EQ(targeted["liked_genres"], json::array({"Rock"}));
  // Same store state, same answer.
  EXPECT_EQ(call_json("GET", "/api/ads", 200, {}, token), targeted);
}

TEST_F(ApiTest, ExpiredTokenRejected) {
  auto token = login();
  now_ += 25h;
  EXPECT_EQ(call("GET", "/api/ads", {}, token).status, 401);
}

TEST_F(ApiTest, UnknownPathAndWrongMethod) {
  EXPECT_EQ(call("GET", "/api/nothing").status, 404);
  EXPECT_EQ(call("GET", "/elsewhere").status, 404);
  EXPECT_EQ(call("GET", "/").status, 404);
  EXPECT_EQ(call("GET", "/api/like").status, 405);
  EXPECT_EQ(call("DELETE", "/api/now-playing").status, 405);
}

TEST_F(ApiTest, NowPlaying) {
  auto idle = call_json("GET", "/api/now-playing", 200);
  EXPECT_EQ(idle["playing"], false);
  EXPECT_EQ(idle["stream_url"], "http://radio.test:8000/");

  auto t = add_track("Piosenka", "Rock");
  api_->set_now_playing_source([&]() -> std::optional<scheduler::NowPlaying> {
    return scheduler::NowPlaying{t, "", kT0};
  });
  auto np = call_json("GET", "/api/now-playing", 200);
  EXPECT_EQ(np["playing"], true);
  EXPECT_EQ(np["title"], "Piosenka");
  EXPECT_EQ(np["display_title"], "Zespol - Piosenka");
  EXPECT_EQ(np["track_id"], t.id);
  EXPECT_EQ(np["started"], format_iso8601(kT0));
}

TEST_F(ApiTest, StatsCsvAndJson) {
  auto token = login();
  EXPECT_EQ(call("GET", "/api/stats.csv").status, 401);
  auto r = call("GET", "/api/stats.csv", {}, token);
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body, "title,genre,album,artist,likes\n");
  auto t = add_track("A, B", "Rock");
  call_json("POST", "/api/like", 200, json{{"track_id", t.id}}.dump(), token);
  EXPECT_EQ(call("GET", "/api/stats.csv", {}, token).body,
            "title,genre,album,artist,likes\n\"A, B\",Rock,Album,Zespol,1\n");
  auto top = call_json("GET", "/api/stats?limit=1", 200, {}, token);
  ASSERT_EQ(top["top"].size(), 1u);
  EXPECT_EQ(top["top"][0]["likes"], 1);
  call_json("GET", "/api/stats?limit=x", 400, {}, token);
}

TEST_F(ApiTest, UploadTrack) {
  auto token = login();
  const std::string b = "b0undary";
  auto body = multipart(b, {{"title", "Piosenka"}, {"genre", "Rock"}, {"artist", "Zespol"}}, "p.mp3",
                        slurp(fixture("short_a.mp3")));
  auto r = api_->route(make_request("POST", "/api/tracks", body, token, "multipart/form-data; boundary=" + b));
  ASSERT_EQ(r.status, 201) << r.body;
  auto track = json::parse(r.body);
  EXPECT_EQ(track["title"], "Piosenka");
  EXPECT_EQ(track["bitrate_kbps"], 128);
  EXPECT_EQ(catalog_->playlist().size(), 1u);

  const auto media = dir_ / "library" / "media";
  const auto files_before = std::distance(std::filesystem::directory_iterator(media), {});
  auto bad = multipart(b, {{"title", "x"}}, "x.mp3", "this is not audio");
  auto rejected =
      api_->route(make_request("POST", "/api/tracks", bad, token, "multipart/form-data; boundary=" + b));
  EXPECT_EQ(rejected.status, 422);
  EXPECT_EQ(std::distance(std::filesystem::directory_iterator(media), {}), files_before);
  EXPECT_EQ(catalog_->tracks().size(), 1u);

  EXPECT_EQ(call("POST", "/api/tracks", "{}", token).status, 415);
  auto list = call_json("GET", "/api/tracks", 200, {}, token);
  EXPECT_EQ(list["tracks"].size(), 1u);
}

TEST_F(ApiTest, AdUploadCreativeAndImpressions) {
  auto token = login();
  const std::string b = "XyZ";
  auto body = multipart(b, {{"target_genre", "Rock"}, {"click_url", "http://shop.test/"}}, "ad.gif", "GIF89a...");
  auto r = api_->route(make_request("POST", "/api/ads", body, token, "multipart/form-data; boundary=" + b));
  ASSERT_EQ(r.status, 201) << r.body;
  auto ad = json::parse(r.body);
  const std::string id = ad["id"];

  auto creative = call("GET", "/api/ads/" + id + "/creative");
  EXPECT_EQ(creative.status, 200);
  EXPECT_EQ(creative.body, "GIF89a...");
  EXPECT_EQ(creative.headers["Content-Type"], "image/gif");

  EXPECT_EQ(call("POST", "/api/ads/" + id + "/impression").status, 401);
  for (int i = 1; i <= 3; ++i) {
    EXPECT_EQ(call_json("POST", "/api/ads/" + id + "/impression", 200, {}, token)["impressions"], i);
  }
  call_json("POST", "/api/ads/" + id + "/reset", 200, {}, token);
  EXPECT_EQ(catalog_->ads().front().impressions, 0u);
  call_json("POST", "/api/ads/ad_0/impression", 404, {}, token);

  auto missing_genre = multipart(b, {{"click_url", "x"}}, "ad.gif", "GIF");
  EXPECT_EQ(api_->route(make_request("POST", "/api/ads", missing_genre, token,
                                     "multipart/form-data; boundary=" + b))
                .status,
            400);
}

TEST_F(ApiTest, Programs) {
  auto token = login();
  auto t = add_track("A", "Rock");
  const std::string start = format_iso8601(now_ + 1h);
  auto created = call_json("POST", "/api/programs", 201,
                           json{{"items", {t.id, t.id}}, {"start", start}, {"title", "Morning Show"}}.dump(),
                           token);
  EXPECT_EQ(created["state"], "pending");
  const std::string id = created["id"];
  EXPECT_EQ(call_json("GET", "/api/programs/" + id, 200, {}, token)["title"], "Morning Show");
  EXPECT_EQ(call_json("GET", "/api/programs", 200, {}, token)["programs"].size(), 1u);

  call_json("POST", "/api/programs", 422,
            json{{"items", {t.id}}, {"start", format_iso8601(now_ - 1h)}}.dump(), token);
  call_json("POST", "/api/programs", 422, json{{"items", json::array()}, {"start", start}}.dump(), token);
  call_json("POST", "/api/programs", 404, json{{"items", {"song_1"}}, {"start", start}}.dump(), token);
  call_json("POST", "/api/programs", 400, json{{"items", {t.id}}, {"start", "tomorrow"}}.dump(), token);

  auto audio = call("GET", "/api/programs/" + id + "/audio");
  EXPECT_EQ(audio.status, 200);
  EXPECT_FALSE(audio.body.empty());

  call_json("DELETE", "/api/programs/" + id, 200, {}, token);
  call_json("DELETE", "/api/programs/" + id, 409, {}, token);
  call_json("GET", "/api/programs/program_0", 404, {}, token);
}

TEST_F(ApiTest, ProgramAudioIsConcatenatedFrames) {
  auto t = add_track("A", "Rock");
  auto p = catalog_->insert_program(ScheduledProgram{.requested_start = now_, .items = {t.id, t.id}}, now_);
  auto audio = call("GET", "/api/programs/" + p.id + "/audio");
  const auto bytes = mp3::read_file(t.path);
  std::string expected;
  for (int i = 0; i < 2; ++i) {
    for (const auto& f : mp3::iterate_frames(bytes)) {
      expected.append(reinterpret_cast<const char*>(f.bytes.data()), f.bytes.size());
    }
  }
  EXPECT_EQ(audio.body, expected);
  EXPECT_EQ(audio.headers["Content-Type"], "audio/mpeg");
}

// ---- feed ------------------------------------------------------------------

ScheduledProgram done_program(std::string id, std::string title, TimePoint finished) {
  ScheduledProgram p;
  p.id = std::move(id);
  p.title = std::move(title);
  p.description = "Opis & <szczegoly>";
  p.items = {"song_1"};
  p.requested_start = finished - 1h;
  p.state = ProgramState::kDone;
  p.published = true;
  p.finished_at = finished;
  return p;
}

TEST(Feed, EmptyChannelIsValid) {
  FeedChannel channel;
  channel.link = "http://radio.test:8089";
  std::vector<std::string> errors;
  auto doc = testing::parse_rss(build_podcast_feed({}, channel), errors);
  EXPECT_TRUE(errors.empty()) << errors.front();
  EXPECT_TRUE(doc.items.empty());
  EXPECT_EQ(doc.title, "Wavecaster");
}

TEST(Feed, OneProgramPubDate) {
  FeedChannel channel;
  channel.link = "http://radio.test:8089";
  auto xml = build_podcast_feed({done_program("program_1", "Morning Show", kT0)}, channel,
                                [](const ScheduledProgram&) { return 4170u; });
  std::vector<std::string> errors;
  auto doc = testing::parse_rss(xml, errors);
  ASSERT_TRUE(errors.empty()) << errors.front();
  ASSERT_EQ(doc.items.size(), 1u);
  const auto& item = doc.items[0];
  EXPECT_EQ(item.title, "Morning Show");
  EXPECT_EQ(item.pub_date, "Sun, 18 Oct 2026 12:00:41 +0000");
  EXPECT_EQ(item.description, "Opis & <szczegoly>");
  EXPECT_EQ(item.enclosure_url, "http://radio.test:8089/api/programs/program_1/audio");
  EXPECT_EQ(item.enclosure_length, "4170");
  EXPECT_EQ(item.enclosure_type, "audio/mpeg");
  EXPECT_EQ(item.guid, "program_1");
  EXPECT_EQ(item.guid_permalink, "false");
}

TEST(Feed, ReverseChronologicalAndFiltered) {
  auto unpublished = done_program("p_hidden", "Hidden", kT0 + 3h);
  unpublished.published = false;
  auto pending = done_program("p_pending", "Pending", kT0 + 4h);
  pending.state = ProgramState::kPending;
  std::vector<ScheduledProgram> programs = {done_program("p_old", "Old", kT0),
                                            done_program("p_new", "New", kT0 + 2h), unpublished, pending};
  std::vector<std::string> errors;
  auto doc = testing::parse_rss(build_podcast_feed(programs, {}), errors);
  ASSERT_TRUE(errors.empty());
  ASSERT_EQ(doc.items.size(), 2u);
  EXPECT_EQ(doc.items[0].guid, "p_new");
  EXPECT_EQ(doc.items[1].guid, "p_old");
}

TEST(Feed, RoundTripsEveryField) {
  std::mt19937 rng(8);
  std::vector<ScheduledProgram> programs;
  const char* titles[] = {"Poranek", "Wieczor \"na zywo\"", "Rock & Roll", "<Nocna> zmiana", "Zolc"};
  for (int i = 0; i < 5; ++i) {
    auto p = done_program("program_" + std::to_string(i), titles[i], kT0 + std::chrono::hours(rng() % 1000));
    p.description = std::string("Odcinek ") + titles[i] + " 'specjalny'";
    programs.push_back(p);
  }
  FeedChannel channel{"Radio & Co", "http://radio.test:8089", "Audycje", "pl"};
  std::vector<std::string> errors;
  auto doc = testing::parse_rss(build_podcast_feed(programs, channel), errors);
  ASSERT_TRUE(errors.empty()) << errors.front();
  EXPECT_EQ(doc.title, "Radio & Co");
  ASSERT_EQ(doc.items.size(), programs.size());
  for (const auto& item : doc.items) {
    auto it = std::find_if(programs.begin(), programs.end(), [&](const auto& p) { return p.id == item.guid; });
    ASSERT_NE(it, programs.end());
    EXPECT_EQ(item.title, it->title);
    EXPECT_EQ(item.description, it->description);
    EXPECT_EQ(parse_rfc822(item.pub_date), *it->finished_at);
    EXPECT_EQ(item.enclosure_url, "http://radio.test:8089/api/programs/" + it->id + "/audio");
  }
}

TEST_F(ApiTest, FeedEndpoint) {
  auto t = add_track("A", "Rock");
  auto p = catalog_->insert_program(ScheduledProgram{.title = "Morning Show", .requested_start = now_, .items = {t.id}},
                                    now_);
  catalog_->transition_program(p.id, ProgramState::kPending, ProgramState::kPlaying, now_);
  catalog_->transition_program(p.id, ProgramState::kPlaying, ProgramState::kDone, kT0 + 10s);
  auto token = login();
  call_json("POST", "/api/programs/" + p.id + "/publish", 200, R"({"published":true})", token);
  auto r = call("GET", "/api/feed.rss");
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.headers["Content-Type"].rfind("application/rss+xml", 0), 0u);
  std::vector<std::string> errors;
  auto doc = testing::parse_rss(r.body, errors);
  ASSERT_TRUE(errors.empty());
  ASSERT_EQ(doc.items.size(), 1u);
  EXPECT_EQ(doc.items[0].pub_date, format_rfc822(kT0 + 10s));
  EXPECT_EQ(doc.items[0].enclosure_length,
            std::to_string(call("GET", "/api/programs/" + p.id + "/audio").body.size()));
}

// ---- announcements ---------------------------------------------------------

TEST_F(ApiTest, AnnounceWithoutSynthesizer) {
  auto token = login();
  EXPECT_EQ(call("POST", "/api/announce", R"({"text":"Zapraszamy"})", token).status, 503);
}

TEST_F(ApiTest, AnnounceTwoPhase) {
  scheduler::StubSynthesizer stub;
  api_->set_synthesizer(&stub);
  auto token = login();
  call_json("POST", "/api/announce", 400, R"({"text":"  "})", token);
  auto draft = call_json("POST", "/api/announce", 200, R"({"text":"Zapraszamy","voice":"anna"})", token);
  EXPECT_GT(draft["duration_s"].get<double>(), 0.0);
  EXPECT_TRUE(catalog_->tracks().empty());
  const std::string id = draft["draft_id"];
  auto preview = call("GET", draft["preview_url"].get<std::string>(), {}, token);
  EXPECT_EQ(preview.status, 200);
  EXPECT_FALSE(mp3::iterate_frames({reinterpret_cast<const std::uint8_t*>(preview.body.data()),
                                    preview.body.size()})
                   .empty());
  auto committed = call_json("POST", "/api/announce/" + id + "/commit", 201, {}, token);
  EXPECT_EQ(committed["track"]["genre"], "announcement");
  EXPECT_EQ(committed["track"]["artist"], "anna");
  call_json("POST", "/api/announce/" + id + "/commit", 404, {}, token);

  auto direct = call_json("POST", "/api/announce", 201, R"({"text":"Od razu","commit":true})", token);
  EXPECT_EQ(direct["track"]["artist"], "default");
  EXPECT_EQ(catalog_->tracks().size(), 2u);
}

// ---- console ---------------------------------------------------------------

TEST_F(ApiTest, ConsoleAssets) {
  auto index = call("GET", "/console/");
  EXPECT_EQ(index.status, 200);
  EXPECT_EQ(index.body, "<html>console</html>");
  EXPECT_EQ(index.headers["Content-Type"], "text/html; charset=utf-8");
  EXPECT_EQ(call("GET", "/console/index.html").status, 200);
  EXPECT_EQ(call("GET", "/console/missing.js").status, 404);
  EXPECT_EQ(call("GET", "/console/../secret.txt").status, 404);
  EXPECT_EQ(call("GET", "/console/%2e%2e/secret.txt").status, 404);
  EXPECT_EQ(call("POST", "/console/index.html").status, 405);
  auto config = call_json("GET", "/console/config.json", 200);
  EXPECT_EQ(config["stream_url"], "http://radio.test:8000/");
  EXPECT_EQ(config["api_base"], "http://radio.test:8089");
  EXPECT_EQ(config["poll_interval_ms"], 5000);
}

// ---- totality --------------------------------------------------------------

TEST_F(ApiTest, RandomRequestsAlwaysAnswered) {
  auto token = login();
  std::mt19937 rng(31);
  const std::vector<std::string> methods = {"GET", "POST", "DELETE", "PUT", "PATCH"};
  const std::vector<std::string> paths = {"/api/like", "/api/ads", "/api/programs", "/api/programs/x",
                                          "/api/programs/x/audio", "/api/announce", "/api/tracks",
                                          "/api/ads/x/impression", "/api/register", "/api/login",
                                          "/console/x", "/api/feed.rss", "/api/stats"};
  for (int i = 0; i < 3000; ++i) {
    std::string body(rng() % 64, '\0');
    for (auto& c : body) c = static_cast<char>(rng());
    if (rng() % 2) body = R"({"items":[1],"start":5,"track_id":null,"text":7})";
    auto r = api_->route(make_request(methods[rng() % methods.size()], paths[rng() % paths.size()], body,
                                      rng() % 2 ? token : ""));
    ASSERT_GE(r.status, 200);
    ASSERT_LT(r.status, 600);
    ASSERT_NE(r.status, 500) << r.body;
  }
}

TEST_F(ApiTest, ServedOverHttpAgainstGarbage) {
  http::ServerConfig config;
  config.bind_address = "127.0.0.1";
  config.read_timeout = 2s;
  http::Server server([this](const http::Request& r) { return api_->route(r); }, config);
  server.start();
  std::mt19937 rng(5);
  for (int i = 0; i < 60; ++i) {
    std::string data(1 + rng() % 300, '\0');
    for (auto& c : data) c = static_cast<char>(rng());
    if (i % 3 == 0) data = "GET /api/" + data + " HTTP/1.1\r\n\r\n";
    auto sock = net::connect_tcp("127.0.0.1", server.port());
    sock.set_recv_timeout(5s);
    sock.send_all(data);
    ::shutdown(sock.fd(), SHUT_WR);
    std::string out;
    std::uint8_t buf[4096];
    for (long n; (n = sock.recv_some(buf)) > 0;) out.append(reinterpret_cast<char*>(buf), n);
    ASSERT_EQ(out.rfind("HTTP/1.1 ", 0), 0u) << i;
  }
  server.stop();
}

}  // namespace
}  // namespace wavecaster::api

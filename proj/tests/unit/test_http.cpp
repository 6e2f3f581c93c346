#include <gtest/gtest.h>

#include <sys/socket.h>

#include <random>
#include <thread>

#include "wavecaster/http.hpp"

namespace wavecaster::http {
namespace {

using namespace std::chrono_literals;
using namespace std::string_literals;

TEST(ParseRequest, SimpleGet) {
  Request r;
  ASSERT_EQ(parse_request("GET /api/ads?limit=5&q=a%20b HTTP/1.1\r\nHost: x\r\nAuthorization: Bearer t\r\n\r\n", r),
            ParseStatus::kComplete);
  EXPECT_EQ(r.method, "GET");
  EXPECT_EQ(r.path, "/api/ads");
  EXPECT_EQ(r.query.at("limit"), "5");
  EXPECT_EQ(r.query.at("q"), "a b");
  EXPECT_EQ(r.header("authorization"), "Bearer t");
  EXPECT_EQ(r.header("HOST"), "x");
  EXPECT_EQ(r.header("missing"), std::nullopt);
}

TEST(ParseRequest, BodyByContentLength) {
  Request r;
  const std::string head = "POST /api/like HTTP/1.1\r\nContent-Length: 13\r\n\r\n";
  EXPECT_EQ(parse_request(head + "{\"track_id\":", r), ParseStatus::kIncomplete);
  ASSERT_EQ(parse_request(head + "{\"track_id\":1}extra", r), ParseStatus::kComplete);
  EXPECT_EQ(r.body, "{\"track_id\":1");
}

TEST(ParseRequest, IncompleteHead) {
  Request r;
  EXPECT_EQ(parse_request("", r), ParseStatus::kIncomplete);
  EXPECT_EQ(parse_request("GET / HTTP/1.1\r\nHost:", r), ParseStatus::kIncomplete);
}

TEST(ParseRequest, BadRequests) {
  Request r;
  for (const char* bad : {"GET\r\n\r\n", "GET / HTTP/2.0\r\n\r\n", " / HTTP/1.1\r\n\r\n",
                          "GET  HTTP/1.1\r\n\r\n", "G(T / HTTP/1.1\r\n\r\n",
                          "GET / HTTP/1.1\r\nNoColon\r\n\r\n", "GET / HTTP/1.1\r\n: v\r\n\r\n",
                          "GET / HTTP/1.1\r\nContent-Length: -1\r\n\r\n",
                          "GET / HTTP/1.1\r\nContent-Length: 12x\r\n\r\n",
                          "GET /a\x01 HTTP/1.1\r\n\r\n"}) {
    EXPECT_EQ(parse_request(bad, r), ParseStatus::kBadRequest) << bad;
  }
}

TEST(ParseRequest, ChunkedUnsupported) {
  Request r;
  EXPECT_EQ(parse_request("POST / HTTP/1.1\r\nTransfer-Encoding: chunked\r\n\r\n", r),
            ParseStatus::kUnsupported);
}

TEST(ParseRequest, Limits) {
  Request r;
  ParseLimits limits;
  limits.max_header_bytes = 64;
  limits.max_body_bytes = 10;
  EXPECT_EQ(parse_request(std::string(100, 'a'), r, limits), ParseStatus::kTooLarge);
  EXPECT_EQ(parse_request("POST / HTTP/1.1\r\nContent-Length: 11\r\n\r\n", r, limits),
            ParseStatus::kTooLarge);
}

TEST(ParseRequest, RepeatedHeadersJoined) {
  Request r;
  ASSERT_EQ(parse_request("GET / HTTP/1.0\r\nX-A: 1\r\nx-a: 2\r\n\r\n", r), ParseStatus::kComplete);
  EXPECT_EQ(r.header("X-A"), "1, 2");
}

TEST(Percent, Decode) {
  EXPECT_EQ(percent_decode("a%2Fb"), "a/b");
  EXPECT_EQ(percent_decode("a+b"), "a+b");
  EXPECT_EQ(percent_decode("a+b", true), "a b");
  EXPECT_EQ(percent_decode("%"), "%");
  EXPECT_EQ(percent_decode("%4"), "%4");
  EXPECT_EQ(percent_decode("%zz"), "%zz");
  EXPECT_EQ(percent_decode("%C4%85"), "\xC4\x85");
}

TEST(Query, Parse) {
  auto q = parse_query("a=1&b=&c&d=x%3Dy");
  EXPECT_EQ(q.at("a"), "1");
  EXPECT_EQ(q.at("b"), "");
  EXPECT_EQ(q.at("c"), "");
  EXPECT_EQ(q.at("d"), "x=y");
}

TEST(Serialize, AddsLengthAndClose) {
  auto r = Response::text(404, "nope\n");
  auto wire = serialize(r);
  EXPECT_EQ(wire.rfind("HTTP/1.1 404 Not Found\r\n", 0), 0u);
  EXPECT_NE(wire.find("Content-Length: 5\r\n"), std::string::npos);
  EXPECT_NE(wire.find("Connection: close\r\n"), std::string::npos);
  EXPECT_EQ(wire.substr(wire.size() - 9), "\r\n\r\nnope\n");
}

TEST(Multipart, Parse) {
  const std::string body =
      "--XyZ\r\n"
      "Content-Disposition: form-data; name=\"title\"\r\n\r\n"
      "Piosenka\r\n"
      "--XyZ\r\n"
      "Content-Disposition: form-data; name=\"file\"; filename=\"a.mp3\"\r\n"
      "Content-Type: audio/mpeg\r\n\r\n"
      "\xFF\xFB\x90\x00\r\n--not-the-end\r\n"
      "--XyZ--\r\n"s;
  auto boundary = multipart_boundary("multipart/form-data; boundary=XyZ");
  ASSERT_EQ(boundary, "XyZ");
  auto parts = parse_multipart(body, *boundary);
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(parts[0].name, "title");
  EXPECT_EQ(parts[0].data, "Piosenka");
  EXPECT_FALSE(parts[0].filename);
  EXPECT_EQ(parts[1].name, "file");
  EXPECT_EQ(parts[1].filename, "a.mp3");
  EXPECT_EQ(parts[1].content_type, "audio/mpeg");
  EXPECT_EQ(parts[1].data, "\xFF\xFB\x90\x00\r\n--not-the-end"s);
}

TEST(Multipart, QuotedBoundaryAndErrors) {
  EXPECT_EQ(multipart_boundary("multipart/form-data; boundary=\"a b\""), "a b");
  EXPECT_EQ(multipart_boundary("application/json"), std::nullopt);
  EXPECT_THROW(parse_multipart("garbage", "XyZ"), std::invalid_argument);
  EXPECT_THROW(parse_multipart("--XyZ\r\nContent-Disposition: form-data; name=\"a\"\r\n\r\nno end", "XyZ"),
               std::invalid_argument);
}

TEST(ParseRequest, RandomBytesNeverCrash) {
  std::mt19937 rng(17);
  const std::string alphabet = "GETPOST /HTP1.0\r\n:-Content-Lngth%?=&";
  for (int i = 0; i < 20000; ++i) {
    std::string data(rng() % 200, '\0');
    for (auto& c : data) c = (rng() % 4 == 0) ? static_cast<char>(rng()) : alphabet[rng() % alphabet.size()];
    if (rng() % 3 == 0) data = "GET / HTTP/1.1\r\n" + data + "\r\n\r\n";
    Request r;
    (void)parse_request(data, r);
  }
}

// ---- server ----------------------------------------------------------------

std::string roundtrip(std::uint16_t port, const std::string& request) {
  auto sock = net::connect_tcp("127.0.0.1", port);
  sock.set_recv_timeout(5s);
  sock.send_all(request);
  ::shutdown(sock.fd(), SHUT_WR);
  std::string out;
  std::uint8_t buf[4096];
  for (;;) {
    const long n = sock.recv_some(buf);
    if (n <= 0) break;
    out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
  }
  return out;
}

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ServerConfig config;
    config.bind_address = "127.0.0.1";
    config.read_timeout = 2s;
    server_ = std::make_unique<Server>(
        [](const Request& r) {
          if (r.path == "/throw") throw std::runtime_error("boom");
          return Response::text(200, r.method + " " + r.path + " " + r.body);
        },
        config);
    server_->start();
  }
  void TearDown() override { server_->stop(); }
  std::unique_ptr<Server> server_;
};

TEST_F(ServerTest, ServesRequest) {
  auto out = roundtrip(server_->port(), "POST /x HTTP/1.1\r\nContent-Length: 2\r\n\r\nhi");
  EXPECT_EQ(out.rfind("HTTP/1.1 200 OK\r\n", 0), 0u);
  EXPECT_NE(out.find("POST /x hi"), std::string::npos);
}

TEST_F(ServerTest, ErrorStatuses) {
  EXPECT_EQ(roundtrip(server_->port(), "nonsense\r\n\r\n").rfind("HTTP/1.1 400", 0), 0u);
  EXPECT_EQ(roundtrip(server_->port(), "POST / HTTP/1.1\r\nTransfer-Encoding: chunked\r\n\r\n")
                .rfind("HTTP/1.1 501", 0),
            0u);
  EXPECT_EQ(roundtrip(server_->port(), "GET /throw HTTP/1.1\r\n\r\n").rfind("HTTP/1.1 500", 0), 0u);
  EXPECT_EQ(roundtrip(server_->port(), "POST / HTTP/1.1\r\nContent-Length: 99\r\n\r\nshort")
                .rfind("HTTP/1.1 400", 0),
            0u);
}

TEST_F(ServerTest, RandomBytesAlwaysGetWellFormedResponse) {
  std::mt19937 rng(23);
  for (int i = 0; i < 150; ++i) {
    std::string data(1 + rng() % 600, '\0');
    for (auto& c : data) c = static_cast<char>(rng());
    if (i % 2 == 0) data += "\r\n\r\n";
    auto out = roundtrip(server_->port(), data);
    ASSERT_EQ(out.rfind("HTTP/1.1 ", 0), 0u) << "iteration " << i;
    ASSERT_NE(out.find("\r\n\r\n"), std::string::npos);
  }
  // Still serving afterwards.
  EXPECT_EQ(roundtrip(server_->port(), "GET / HTTP/1.0\r\n\r\n").rfind("HTTP/1.1 200", 0), 0u);
}

}  // namespace
}  // namespace wavecaster::http

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "wavecaster/net.hpp"
#include "wavecaster/scheduler.hpp"

extern char** environ;

namespace wavecaster::scheduler {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string unique_name(const fs::path& dir, const std::string& stem) {
  static std::atomic<std::uint64_t> counter{0};
  return (dir / (stem + "_" + std::to_string(to_epoch_ms(now_ms())) + "_" +
                 std::to_string(counter++) + ".mp3"))
      .string();
}

struct CommandResult {
  int exit_code = -1;
  std::string out;
};

CommandResult run_command(const std::vector<std::string>& argv) {
  int pipe_fds[2];
  if (pipe(pipe_fds) != 0) throw SynthesisError("pipe failed");
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, pipe_fds[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, pipe_fds[0]);
  posix_spawn_file_actions_addclose(&actions, pipe_fds[1]);

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  pid_t pid = 0;
  int rc = posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  close(pipe_fds[1]);
  if (rc != 0) {
    close(pipe_fds[0]);
    throw SynthesisError("cannot run " + argv[0] + ": " + std::strerror(rc));
  }
  CommandResult result;
  char buf[4096];
  for (;;) {
    ssize_t n = read(pipe_fds[0], buf, sizeof buf);
    if (n > 0) {
      result.out.append(buf, static_cast<std::size_t>(n));
    } else if (n < 0 && errno == EINTR) {
      continue;
    } else {
      break;
    }
  }
  close(pipe_fds[0]);
  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

}  // namespace

fs::path StubSynthesizer::synthesize(const std::string& text, const std::string& /*voice*/,
                                     const fs::path& work_dir) {
  fs::create_directories(work_dir);
  const double seconds = 1.0 + 0.05 * static_cast<double>(text.size());
  const auto frames = static_cast<std::size_t>(seconds * 44100.0 / mp3::kSamplesPerFrame);
  auto bytes = mp3::make_silent_frames(128, 44100, std::max<std::size_t>(frames, 1));
  const fs::path out = unique_name(work_dir, "tts");
  std::ofstream f(out, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw SynthesisError("cannot write " + out.string());
  return out;
}

fs::path CommandSynthesizer::synthesize(const std::string& text, const std::string& voice,
                                        const fs::path& work_dir) {
  fs::create_directories(work_dir);
  auto result = run_command({program_, text, voice, work_dir.string()});
  if (result.exit_code != 0) {
    throw SynthesisError("synthesizer exited with status " + std::to_string(result.exit_code));
  }
  std::string path = trim(result.out);
  if (path.empty()) throw SynthesisError("synthesizer printed no path");
  return path;
}

fs::path HttpSynthesizer::synthesize(const std::string& text, const std::string& voice,
                                     const fs::path& work_dir) {
  fs::create_directories(work_dir);
  net::Url url;
  try {
    url = net::parse_url(url_);
  } catch (const std::exception& e) {
    throw SynthesisError(e.what());
  }
  httplib::Client client(url.host, url.port);
  client.set_connection_timeout(5);
  client.set_read_timeout(60);
  nlohmann::json body = {{"text", text}, {"voice", voice}};
  auto res = client.Post(url.path, body.dump(), "application/json");
  if (!res) throw SynthesisError("synthesizer unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw SynthesisError("synthesizer answered HTTP " + std::to_string(res->status));
  }
  const std::string type = res->get_header_value("Content-Type");
  if (type.rfind("application/json", 0) == 0) {
    auto reply = nlohmann::json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("path") || !reply["path"].is_string()) {
      throw SynthesisError("synthesizer reply has no path");
    }
    return reply["path"].get<std::string>();
  }
  const fs::path out = unique_name(work_dir, "tts");
  std::ofstream f(out, std::ios::binary);
  f.write(res->body.data(), static_cast<std::streamsize>(res->body.size()));
  if (!f) throw SynthesisError("cannot write " + out.string());
  return out;
}

std::unique_ptr<SpeechSynthesizer> make_synthesizer(const std::string& adapter) {
  if (adapter.empty() || adapter == "stub") return std::make_unique<StubSynthesizer>();
  if (adapter.rfind("http://", 0) == 0) return std::make_unique<HttpSynthesizer>(adapter);
  return std::make_unique<CommandSynthesizer>(adapter);
}

AnnouncementDraft make_announcement(const std::string& text, const std::string& voice,
                                    SpeechSynthesizer& synthesizer, const fs::path& work_dir) {
  if (trim(text).empty()) throw SynthesisError("announcement text is empty");
  AnnouncementDraft draft;
  draft.text = text;
  draft.voice = voice;
  draft.path = synthesizer.synthesize(text, voice, work_dir);
  std::vector<std::uint8_t> bytes;
  try {
    bytes = mp3::read_file(draft.path.string());
  } catch (const std::exception&) {
    throw SynthesisError("synthesizer output missing: " + draft.path.string());
  }
  try {
    draft.info = mp3::stream_info(bytes);
  } catch (const mp3::NoFramesError&) {
    throw SynthesisError("synthesizer output is not MP3");
  }
  return draft;
}

Track commit_announcement(Catalog& catalog, const AnnouncementDraft& draft, TimePoint now) {
  const fs::path media = catalog.dir() / "media";
  fs::create_directories(media);
  const fs::path target = unique_name(media, "announcement");
  std::error_code ec;
  fs::copy_file(draft.path, target, fs::copy_options::overwrite_existing, ec);
  if (ec) throw CatalogError(CatalogError::Code::kIo, "cannot store announcement: " + ec.message());
  TrackMeta meta;
  meta.title = draft.text.size() > 60 ? draft.text.substr(0, 60) : draft.text;
  meta.artist = draft.voice;
  meta.genre = kAnnouncementGenre;
  return catalog.add_track(meta, target, now);
}

}  // namespace wavecaster::scheduler

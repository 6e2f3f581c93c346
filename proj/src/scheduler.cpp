#include "wavecaster/scheduler.hpp"

#include <algorithm>
#include <cmath>

namespace wavecaster::scheduler {

std::string next_item(std::span<const std::string> library, const LikeCounts& likes,
                      const std::optional<std::string>& previous, Rng& rng) {
  if (library.empty()) throw EmptyLibraryError();
  const bool avoid_repeat = library.size() >= 2 && previous.has_value();
  std::vector<double> weights;
  weights.reserve(library.size());
  for (const auto& id : library) {
    if (avoid_repeat && id == *previous) {
      weights.push_back(0.0);
      continue;
    }
    auto it = likes.find(id);
    weights.push_back(1.0 + static_cast<double>(it == likes.end() ? 0 : it->second));
  }
  // All remaining weight may sit on the previous track if it appears more
  // than once in the library; fall back to the full set then.
  if (std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; })) {
    std::fill(weights.begin(), weights.end(), 1.0);
  }
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  return library[pick(rng)];
}

TimePoint PlayState::current_end() const {
  return current_started +
         std::chrono::milliseconds(std::llround(current_duration_s * 1000.0));
}

const char* to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::kIdle: return "idle";
    case ActionKind::kStartTrack: return "start_track";
    case ActionKind::kStartProgram: return "start_program";
    case ActionKind::kFinishProgram: return "finish_program";
  }
  return "?";
}

namespace {

void begin_track(PlayState& state, const std::string& id, TimePoint now,
                 const std::map<std::string, double>& durations) {
  state.current_track = id;
  state.current_started = now;
  auto it = durations.find(id);
  state.current_duration_s = it == durations.end() ? 0.0 : it->second;
}

}  // namespace

Action scheduler_step(PlayState& state, TimePoint now,
                      const std::map<std::string, double>& durations, const LikeCounts& likes,
                      Rng& rng) {
  if (state.current_track && now < state.current_end()) return {};

  if (state.current_track) {
    state.previous_track = state.current_track;
    state.current_track.reset();
  }

  if (state.mode == Mode::kProgram && state.active_program) {
    const auto& program = *state.active_program;
    if (state.program_cursor < program.items.size()) {
      const std::string& id = program.items[state.program_cursor++];
      begin_track(state, id, now, durations);
      return {ActionKind::kStartTrack, id, program.id};
    }
    Action finish{ActionKind::kFinishProgram, {}, program.id};
    state.active_program.reset();
    state.program_cursor = 0;
    state.mode = Mode::kShuffle;
    return finish;
  }

  if (!state.program_queue.empty() && state.program_queue.front().requested_start <= now) {
    state.active_program = state.program_queue.front();
    state.program_queue.erase(state.program_queue.begin());
    state.mode = Mode::kProgram;
    state.active_program->state = ProgramState::kPlaying;
    state.program_cursor = 0;
    const std::string id = state.active_program->items[state.program_cursor++];
    begin_track(state, id, now, durations);
    return {ActionKind::kStartProgram, id, state.active_program->id};
  }

  if (state.base_playlist.empty()) return {};

  std::string id;
  if (state.order == Order::kSequential) {
    if (state.base_index >= state.base_playlist.size()) state.base_index = 0;
    id = state.base_playlist[state.base_index++];
    if (state.base_index >= state.base_playlist.size()) state.base_index = 0;
  } else {
    id = next_item(state.base_playlist, likes, state.previous_track, rng);
  }
  begin_track(state, id, now, durations);
  return {ActionKind::kStartTrack, id, {}};
}

std::vector<ScheduledProgram> pending_programs(const std::vector<ScheduledProgram>& all) {
  std::vector<ScheduledProgram> pending;
  std::copy_if(all.begin(), all.end(), std::back_inserter(pending),
               [](const ScheduledProgram& p) { return p.state == ProgramState::kPending; });
  std::sort(pending.begin(), pending.end(),
            [](const ScheduledProgram& a, const ScheduledProgram& b) {
              if (a.requested_start != b.requested_start) {
                return a.requested_start < b.requested_start;
              }
              return a.enqueue_seq < b.enqueue_seq;
            });
  return pending;
}

ScheduledProgram enqueue_program(Catalog& catalog, const std::vector<std::string>& items,
                                 TimePoint requested_start, TimePoint now,
                                 const std::string& title, const std::string& description) {
  using Code = CatalogError::Code;
  if (items.empty()) throw CatalogError(Code::kInvalid, "program has no items");
  if (requested_start < now) throw CatalogError(Code::kInvalid, "program start is in the past");
  for (const auto& id : items) {
    if (!catalog.find_track(id)) throw CatalogError(Code::kNotFound, "unknown track " + id);
  }
  ScheduledProgram program;
  program.title = title;
  program.description = description;
  program.requested_start = requested_start;
  program.items = items;
  return catalog.insert_program(std::move(program), now);
}

void cancel_program(Catalog& catalog, const std::string& id, TimePoint now) {
  catalog.transition_program(id, ProgramState::kPending, ProgramState::kCancelled, now);
}

}  // namespace wavecaster::scheduler

#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lpffd/io.hpp"
#include "lpffd/metrics.hpp"
#include "lpffd/scenario.hpp"

namespace lpffd {

/// Live editing state for one client.
struct SessionState {
  std::string id;
  Workspace workspace;
  SolverConfig config;
  HandleSet handles;
  std::vector<EnergyTerms> energies;  // of the latest solve
  Points vertices;                    // V' of the latest solve
  SystemCache cache;
  long revision = 0;
};

/// Message handler behind every transport. Messages are JSON objects
/// {type, session, revision, payload}; see docs/protocol.md.
class SessionService {
 public:
  /// Handles one message and returns the single response.
  json handle(const json& message) { return dispatch(message, true); }

  /// Handles a burst in order. An updateHandles that is followed in the same
  /// burst by another solving updateHandles for the same session (with no
  /// getState in between) is applied without solving; only the latest move is solved.
  std::vector<json> handle_burst(const std::vector<json>& messages) {
    std::vector<json> out;
    out.reserve(messages.size());
    for (size_t k = 0; k < messages.size(); ++k) {
      bool solve = true;
      if (is_solving_update(messages[k])) {
        const std::string sid = messages[k].value("session", std::string());
        for (size_t m = k + 1; m < messages.size(); ++m) {
          if (messages[m].value("session", std::string()) != sid) continue;
          if (messages[m].value("type", std::string()) == "getState") break;
          if (is_solving_update(messages[m])) {
            solve = false;
            break;
          }
        }
      }
      out.push_back(dispatch(messages[k], solve));
    }
    return out;
  }

  const SessionState* find(const std::string& id) const {
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second.get();
  }

  size_t session_count() const { return sessions_.size(); }

 private:
  static bool is_solving_update(const json& m) {
    return m.is_object() && m.value("type", std::string()) == "updateHandles" && m.contains("payload") &&
           m["payload"].is_object() && m["payload"].value("solveNow", false);
  }

  static json error(const std::string& session, long revision, const std::string& code, const std::string& message) {
    json s = session.empty() ? json(nullptr) : json(session);
    return {{"type", "error"}, {"session", s}, {"revision", revision},
            {"payload", {{"code", code}, {"message", message}}}};
  }

  json snapshot(const SessionState& s, bool solved) const {
    const auto& ws = s.workspace;
    const DistortionReport report = distortion_report(ws.mesh, s.vertices);
    json energies = json::array();
    for (const auto& e : s.energies) energies.push_back(energy_to_json(e));
    return {{"type", "stateSnapshot"},
            {"session", s.id},
            {"revision", s.revision},
            {"payload",
             {{"solved", solved},
              {"grid", grid_to_json(ws.grid)},
              {"vertices", points_to_json(s.vertices)},
              {"handles", handles_to_json(s.handles)},
              {"energies", std::move(energies)},
              {"distortion", report_to_json(report, false)},
              {"cache", {{"hits", s.cache.hits()}, {"factorizations", s.cache.misses()}}}}}};
  }

  json dispatch(const json& m, bool solve_allowed) {
    if (!m.is_object() || !m.contains("type") || !m["type"].is_string())
      return error("", 0, "invalid_message", "message must be an object with a string 'type'");
    const std::string type = m["type"];
    const json payload = m.value("payload", json::object());
    try {
      if (type == "createSession") return create(payload);
      const std::string sid = m.value("session", std::string());
      auto it = sessions_.find(sid);
      if (it == sessions_.end()) return error(sid, 0, "unknown_session", "unknown session '" + sid + "'");
      SessionState& s = *it->second;
      if (type == "getState") return snapshot(s, false);
      if (type == "updateHandles") return update(s, payload, solve_allowed);
      return error(sid, s.revision, "invalid_message", "unknown message type '" + type + "'");
    } catch (const Error& e) {
      const std::string sid = m.value("session", std::string());
      const auto* s = find(sid);
      return error(sid, s ? s->revision : 0, to_string(e.code()), e.what());
    } catch (const std::exception& e) {
      return error(m.value("session", std::string()), 0, "invalid_message", e.what());
    }
  }

  json create(const json& payload) {
    TriMesh mesh;
    try {
      if (payload.contains("scene")) mesh = scene_from_json(payload.at("scene"));
      else if (payload.contains("scenePath")) mesh = load_scene(payload.at("scenePath").get<std::string>());
      else return error("", 0, "invalid_scene", "invalid scene: payload needs 'scene' or 'scenePath'");
    } catch (const Error& e) {
      return error("", 0, "invalid_scene", std::string("invalid scene: ") + e.what());
    }
    std::vector<int> dims = payload.value("dims", std::vector<int>(mesh.dimension(), 10));
    SolverConfig config;
    if (payload.contains("config")) apply_config_json(config, payload.at("config"));
    std::optional<Box> box;
    if (payload.contains("box")) {
      const int d = mesh.dimension();
      box = Box{vector_from_json(payload["box"].at("origin"), d), vector_from_json(payload["box"].at("extent"), d)};
    }
    Workspace ws;
    try {
      ws = Workspace::build(std::move(mesh), dims, box, config.laplacian_mode);
    } catch (const VertexOutsideGrid& e) {
      return error("", 0, to_string(e.code()), e.what());
    } catch (const Error& e) {
      return error("", 0, "invalid_scene", e.what());
    }
    auto state = std::make_unique<SessionState>();
    state->id = payload.value("id", "s" + std::to_string(++counter_));
    if (sessions_.count(state->id)) return error(state->id, 0, "invalid_message", "session id already in use");
    state->workspace = std::move(ws);
    state->config = config;
    state->vertices = state->workspace.mesh.vertices();
    SessionState& s = *state;
    sessions_[s.id] = std::move(state);
    return snapshot(s, false);
  }

  json update(SessionState& s, const json& payload, bool solve_allowed) {
    const int d = s.workspace.mesh.dimension();
    HandleSet next = s.handles;
    auto apply = [&](const char* key, std::map<int, Eigen::VectorXd>& into) {
      if (!payload.contains(key)) return;
      const json& part = payload.at(key);
      for (int id : part.value("remove", std::vector<int>{})) {
        if (!into.erase(id)) throw Error(ErrorCode::UnknownId, std::string("no ") + key + " handle " + std::to_string(id));
      }
      if (part.contains("set")) read_handle_list(part.at("set"), d, into);
    };
    apply("vertex", next.vertex);
    apply("grid", next.grid);
    next.validate(s.workspace.mesh.vertex_count(), s.workspace.grid.handle_count(), d);

    const bool solve = solve_allowed && payload.value("solveNow", false);
    if (solve) {
      const Points warm = s.workspace.grid.current();
      SolveResult r = lp_ffd_solve(s.workspace.mesh, s.workspace.grid, s.workspace.weights, s.workspace.laplacian,
                                   next, s.config, &warm, &s.cache);
      s.workspace.grid.set_current(r.handles);
      s.vertices = std::move(r.vertices);
      s.energies = std::move(r.energies);
    }
    s.handles = std::move(next);
    ++s.revision;
    return snapshot(s, solve);
  }

  std::map<std::string, std::unique_ptr<SessionState>> sessions_;
  long counter_ = 0;
};

}  // namespace lpffd

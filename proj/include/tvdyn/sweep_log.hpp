#ifndef TVDYN_SWEEP_LOG_HPP
#define TVDYN_SWEEP_LOG_HPP

#include "engine.hpp"

#include <nlohmann/json.hpp>

#include <ostream>

namespace tvdyn {

/// One JSON object per line: sweep index, bound, warmup flag, rotations and
/// per-update wall-clock seconds.
inline void write_sweep_json(std::ostream& os, const SweepReport& r) {
    nlohmann::json j;
    j["sweep"] = r.sweep_index;
    j["elbo"] = r.elbo;
    j["warmup"] = r.warmup;
    j["rotation_x"] = r.rotation_x;
    j["rotation_s"] = r.rotation_s;
    nlohmann::json t = nlohmann::json::object();
    for (const auto& u : r.timings) t[u.name] = u.seconds;
    j["timings"] = std::move(t);
    os << j.dump() << '\n';
}

}  // namespace tvdyn

#endif  // TVDYN_SWEEP_LOG_HPP

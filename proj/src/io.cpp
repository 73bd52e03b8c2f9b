#include "pathsim/io.hpp"

#include <charconv>
#include <nlohmann/json.hpp>

#include "pathsim/errors.hpp"

namespace pathsim {

using nlohmann::json;

namespace {

constexpr int kVersion = 1;

const char* origin_name(LayerOrigin o) {
    switch (o) {
    case LayerOrigin::D1: return "D1";
    case LayerOrigin::D2: return "D2";
    case LayerOrigin::D3: return "D3";
    default: return "none";
    }
}

LayerOrigin origin_from(const std::string& s) {
    if (s == "D1") return LayerOrigin::D1;
    if (s == "D2") return LayerOrigin::D2;
    if (s == "D3") return LayerOrigin::D3;
    if (s == "none") return LayerOrigin::None;
    throw ConfigError("unknown layer origin '" + s + "'");
}

json to_json_value(const Skeleton& sk) {
    json pts = json::array();
    for (const Knot& k : sk.points) pts.push_back({k.t, k.w});
    json layers = json::array();
    for (const IntersectionLayer& il : sk.layers)
        layers.push_back({{"s", il.s},
                          {"t", il.t},
                          {"x", il.x},
                          {"y", il.y},
                          {"min_lo", il.min_lo},
                          {"min_hi", il.min_hi},
                          {"max_lo", il.max_lo},
                          {"max_hi", il.max_hi},
                          {"origin", origin_name(il.origin)}});
    return {{"provenance", to_string(sk.provenance)},
            {"stats",
             {{"proposals", sk.stats.proposals}, {"kappa", sk.stats.kappa}, {"evaluated", sk.stats.evaluated}}},
            {"points", pts},
            {"layers", layers}};
}

Skeleton from_json_value(const json& j) {
    Skeleton sk;
    sk.provenance = provenance_from_string(j.at("provenance").get<std::string>());
    const json& st = j.at("stats");
    sk.stats = {st.at("proposals").get<std::size_t>(), st.at("kappa").get<std::size_t>(),
                st.at("evaluated").get<std::size_t>()};
    for (const json& p : j.at("points")) sk.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    for (const json& l : j.at("layers"))
        sk.layers.push_back({l.at("s").get<double>(), l.at("t").get<double>(), l.at("x").get<double>(),
                             l.at("y").get<double>(), l.at("min_lo").get<double>(), l.at("min_hi").get<double>(),
                             l.at("max_lo").get<double>(), l.at("max_hi").get<double>(),
                             origin_from(l.at("origin").get<std::string>())});
    if (sk.points.size() < 2) throw ConfigError("skeleton needs at least two points");
    if (!sk.layers.empty() && sk.layers.size() + 1 != sk.points.size())
        throw ConfigError("skeleton layer count does not match its points");
    return sk;
}

json parse_record(const std::string& text, const char* format) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError(std::string("expected a ") + format + " record");
    if (j.value("format", "") != format) throw ConfigError(std::string("expected a ") + format + " record");
    if (j.value("version", 0) != kVersion) throw ConfigError("unsupported record version");
    return j;
}

template <class F>
auto guarded(F f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed record: ") + e.what());
    }
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string skeleton_to_json(const Skeleton& sk) {
    json j = to_json_value(sk);
    j["format"] = "pathsim-skeleton";
    j["version"] = kVersion;
    return j.dump() + "\n";
}

Skeleton skeleton_from_json(const std::string& text) {
    const json j = parse_record(text, "pathsim-skeleton");
    return guarded([&] { return from_json_value(j); });
}

std::string jump_skeleton_to_json(const JumpSkeleton& sk) {
    json segs = json::array();
    for (const Skeleton& s : sk.segments) segs.push_back(to_json_value(s));
    json jumps = json::array();
    for (const JumpEvent& e : sk.jumps) jumps.push_back({{"time", e.time}, {"pre", e.pre}, {"post", e.post}});
    const json j = {{"format", "pathsim-jump-skeleton"},
                    {"version", kVersion},
                    {"provenance", sk.provenance},
                    {"horizon", sk.horizon},
                    {"terminal", sk.terminal},
                    {"proposals", sk.proposals},
                    {"segments", segs},
                    {"jumps", jumps}};
    return j.dump() + "\n";
}

JumpSkeleton jump_skeleton_from_json(const std::string& text) {
    const json j = parse_record(text, "pathsim-jump-skeleton");
    return guarded([&] {
        JumpSkeleton sk;
        sk.provenance = j.at("provenance").get<std::string>();
        sk.horizon = j.at("horizon").get<double>();
        sk.terminal = j.at("terminal").get<double>();
        sk.proposals = j.at("proposals").get<std::size_t>();
        for (const json& s : j.at("segments")) sk.segments.push_back(from_json_value(s));
        for (const json& e : j.at("jumps"))
            sk.jumps.push_back({e.at("time").get<double>(), e.at("pre").get<double>(), e.at("post").get<double>()});
        return sk;
    });
}

} // namespace pathsim

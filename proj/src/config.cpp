#include "thermo/config.hpp"

#include <fstream>
#include <sstream>

namespace thermo {

std::map<std::string, std::string> parse_kv_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("config line " + std::to_string(lineno) + ": expected key=value, got '" +
                        line + "'");
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

std::map<std::string, std::string> parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_kv_text(buf.str());
}

double KvConfig::get_double(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw Error(origin_ + ": missing key '" + key + "'");
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw Error(origin_ + ": key '" + key + "' is not a number: " + it->second);
    }
}

double KvConfig::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

int KvConfig::get_int(const std::string& key, int fallback) const {
    if (!has(key)) return fallback;
    return static_cast<int>(get_double(key));
}

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

CameraIntrinsics load_intrinsics(const std::string& path) {
    const KvConfig cfg = KvConfig::from_file(path);
    CameraIntrinsics K{cfg.get_double("fx"), cfg.get_double("fy"), cfg.get_double("cx"),
                       cfg.get_double("cy")};
    K.validate();
    return K;
}

RigidTransform load_pose(const std::string& path) {
    const KvConfig cfg = KvConfig::from_file(path);
    return RigidTransform::from_axis_angle(
        {cfg.get_double("rx"), cfg.get_double("ry"), cfg.get_double("rz")},
        {cfg.get_double("tx"), cfg.get_double("ty"), cfg.get_double("tz")});
}

}  // namespace thermo

#pragma once

#include <map>
#include <string>

#include "thermo/geometry.hpp"

namespace thermo {

/// Plain key=value text config; '#' starts a comment, blank lines ignored.
std::map<std::string, std::string> parse_kv_file(const std::string& path);
std::map<std::string, std::string> parse_kv_text(const std::string& text);

class KvConfig {
public:
    explicit KvConfig(std::map<std::string, std::string> values, std::string origin)
        : values_(std::move(values)), origin_(std::move(origin)) {}

    static KvConfig from_file(const std::string& path) {
        return KvConfig(parse_kv_file(path), path);
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;

private:
    std::map<std::string, std::string> values_;
    std::string origin_;
};

/// fx, fy, cx, cy keys.
CameraIntrinsics load_intrinsics(const std::string& path);

/// tx ty tz rx ry rz keys (axis-angle, radians).
RigidTransform load_pose(const std::string& path);

}  // namespace thermo

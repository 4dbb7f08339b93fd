#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relaxo/drt.hpp"

namespace relaxo {

/// INI-style configuration: [section] headers, key = value lines, ';' or '#'
/// comments. Values keep their raw text; list values are comma separated.
class IniConfig {
public:
    static IniConfig parse_file(const std::filesystem::path& path);
    static IniConfig parse_text(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;
    std::optional<std::string> get(const std::string& section, const std::string& key) const;
    std::optional<double> get_double(const std::string& section, const std::string& key) const;
    std::optional<long long> get_int(const std::string& section, const std::string& key) const;
    std::vector<std::string> get_list(const std::string& section, const std::string& key) const;
    std::vector<double> get_double_list(const std::string& section, const std::string& key) const;

    /// Verbatim text the config was parsed from (byte-faithful echo).
    const std::string& source_text() const { return source_; }

private:
    std::map<std::string, std::map<std::string, std::string>> values_;
    std::string source_;
};

/// Reads the [model] block (aligned lists kind/t0/shape/scale, one entry per
/// process; LN processes may give mu instead of t0). Returns nothing when the
/// section is absent.
std::optional<DrtModel> model_from_config(const IniConfig& cfg);

/// Record of one CLI run: resolved settings, config echo, and every file the
/// run emitted. Written as plain text next to the artifacts.
class RunManifest {
public:
    RunManifest(std::string command, std::filesystem::path out_dir);

    void set_config_echo(std::string text) { config_echo_ = std::move(text); }
    void add_setting(const std::string& key, const std::string& value);
    void add_artifact(const std::filesystem::path& path);

    void write() const;

private:
    std::string command_;
    std::filesystem::path out_dir_;
    std::string config_echo_;
    std::vector<std::pair<std::string, std::string>> settings_;
    std::vector<std::string> artifacts_;
};

}  // namespace relaxo

#include "relaxo/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace relaxo {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

IniConfig IniConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

IniConfig IniConfig::parse_text(const std::string& text) {
    IniConfig cfg;
    cfg.source_ = text;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto comment = line.find_first_of(";#");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::runtime_error("config line " + std::to_string(lineno) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
        cfg.values_[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return cfg;
}

bool IniConfig::has(const std::string& section, const std::string& key) const {
    const auto s = values_.find(section);
    return s != values_.end() && s->second.count(key) > 0;
}

std::optional<std::string> IniConfig::get(const std::string& section, const std::string& key) const {
    const auto s = values_.find(section);
    if (s == values_.end()) return std::nullopt;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
}

std::optional<double> IniConfig::get_double(const std::string& section, const std::string& key) const {
    const auto v = get(section, key);
    if (!v) return std::nullopt;
    try {
        std::size_t pos = 0;
        const double d = std::stod(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument(*v);
        return d;
    } catch (const std::exception&) {
        throw std::runtime_error("config value " + section + "." + key + " is not a number: " + *v);
    }
}

std::optional<long long> IniConfig::get_int(const std::string& section, const std::string& key) const {
    const auto v = get(section, key);
    if (!v) return std::nullopt;
    try {
        std::size_t pos = 0;
        const long long i = std::stoll(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument(*v);
        return i;
    } catch (const std::exception&) {
        throw std::runtime_error("config value " + section + "." + key + " is not an integer: " + *v);
    }
}

std::vector<std::string> IniConfig::get_list(const std::string& section, const std::string& key) const {
    const auto v = get(section, key);
    std::vector<std::string> out;
    if (!v) return out;
    std::istringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> IniConfig::get_double_list(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : get_list(section, key)) {
        try {
            out.push_back(std::stod(s));
        } catch (const std::exception&) {
            throw std::runtime_error("config value " + section + "." + key + " has a bad entry: " + s);
        }
    }
    return out;
}

std::optional<DrtModel> model_from_config(const IniConfig& cfg) {
    if (!cfg.has("model", "kind")) return std::nullopt;
    const auto kinds = cfg.get_list("model", "kind");
    const auto shapes = cfg.get_double_list("model", "shape");
    const auto scales = cfg.get_double_list("model", "scale");
    const auto t0s = cfg.get_double_list("model", "t0");
    const auto mus = cfg.get_double_list("model", "mu");

    const std::size_t n = kinds.size();
    if (shapes.size() != n || scales.size() != n)
        throw std::runtime_error("[model] kind/shape/scale lists must have equal length");
    if (!t0s.empty() && t0s.size() != n)
        throw std::runtime_error("[model] t0 list length does not match kind");
    if (!mus.empty() && mus.size() != n)
        throw std::runtime_error("[model] mu list length does not match kind");

    DrtModel model;
    for (std::size_t i = 0; i < n; ++i) {
        const bool is_rq = kinds[i] == "RQ" || kinds[i] == "rq";
        const bool is_ln = kinds[i] == "LN" || kinds[i] == "ln";
        if (!is_rq && !is_ln) throw std::runtime_error("[model] kind must be RQ or LN: " + kinds[i]);
        if (is_rq) {
            if (t0s.empty()) throw std::runtime_error("[model] RQ processes need t0");
            model.processes.push_back(DrtProcess::rq(t0s[i], shapes[i], scales[i]));
        } else if (!mus.empty()) {
            model.processes.push_back(DrtProcess::lognormal_from_mu(mus[i], shapes[i], scales[i]));
        } else {
            if (t0s.empty()) throw std::runtime_error("[model] LN processes need t0 or mu");
            model.processes.push_back(DrtProcess::lognormal(t0s[i], shapes[i], scales[i]));
        }
    }
    model.validate();
    return model;
}

RunManifest::RunManifest(std::string command, std::filesystem::path out_dir)
    : command_(std::move(command)), out_dir_(std::move(out_dir)) {}

void RunManifest::add_setting(const std::string& key, const std::string& value) {
    settings_.emplace_back(key, value);
}

void RunManifest::add_artifact(const std::filesystem::path& path) {
    artifacts_.push_back(path.filename().string());
}

void RunManifest::write() const {
    std::filesystem::create_directories(out_dir_);
    std::ofstream out(out_dir_ / "manifest.txt", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest in " + out_dir_.string());
    out << "tool: relaxo " << RELAXO_VERSION << '\n';
    out << "command: " << command_ << '\n';
    out << "[settings]\n";
    for (const auto& [k, v] : settings_) out << k << " = " << v << '\n';
    out << "[artifacts]\n";
    for (const auto& a : artifacts_) out << a << '\n';
    if (!config_echo_.empty()) {
        out << "[config-echo]\n";
        out << config_echo_;
        if (config_echo_.back() != '\n') out << '\n';
    }
}

}  // namespace relaxo

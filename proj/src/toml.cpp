#include "bip/toml.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bip/errors.hpp"
#include "bip/experiment.hpp"

namespace bip {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

}  // namespace

double TomlValue::as_double(const std::string& key) const {
    char* end = nullptr;
    const double v = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() || *end != '\0') throw config_error("config key '" + key + "': expected a number, got '" + raw + "'");
    return v;
}

std::int64_t TomlValue::as_int(const std::string& key) const {
    char* end = nullptr;
    const std::int64_t v = std::strtoll(raw.c_str(), &end, 10);
    if (end == raw.c_str() || *end != '\0') throw config_error("config key '" + key + "': expected an integer, got '" + raw + "'");
    return v;
}

bool TomlValue::as_bool(const std::string& key) const {
    if (raw == "true") return true;
    if (raw == "false") return false;
    throw config_error("config key '" + key + "': expected true/false, got '" + raw + "'");
}

std::vector<double> TomlValue::as_double_list(const std::string& key) const {
    const std::vector<std::string>& src = is_array ? items : std::vector<std::string>{raw};
    std::vector<double> out;
    for (const std::string& s : src) {
        TomlValue v;
        v.raw = s;
        out.push_back(v.as_double(key));
    }
    return out;
}

std::vector<std::uint64_t> TomlValue::as_uint_list(const std::string& key) const {
    const std::vector<std::string>& src = is_array ? items : std::vector<std::string>{raw};
    std::vector<std::uint64_t> out;
    for (const std::string& s : src) {
        TomlValue v;
        v.raw = s;
        const std::int64_t x = v.as_int(key);
        if (x < 0) throw config_error("config key '" + key + "': expected a non-negative integer");
        out.push_back(static_cast<std::uint64_t>(x));
    }
    return out;
}

TomlTable parse_toml(const std::string& text, const std::string& origin) {
    TomlTable table;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw config_error(origin + ":" + std::to_string(lineno) + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw config_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) throw config_error(origin + ":" + std::to_string(lineno) + ": empty key or value");

        TomlValue tv;
        if (value.front() == '[') {
            if (value.back() != ']') throw config_error(origin + ":" + std::to_string(lineno) + ": unterminated array");
            tv.is_array = true;
            std::string body = value.substr(1, value.size() - 2);
            std::string cur;
            for (char c : body) {
                if (c == ',') {
                    if (!trim(cur).empty()) tv.items.push_back(unquote(trim(cur)));
                    cur.clear();
                } else {
                    cur.push_back(c);
                }
            }
            if (!trim(cur).empty()) tv.items.push_back(unquote(trim(cur)));
        } else {
            tv.raw = unquote(value);
        }
        table[section.empty() ? key : section + "." + key] = std::move(tv);
    }
    return table;
}

TomlTable parse_toml_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_toml(ss.str(), path);
}

void apply_toml(ExperimentConfig& cfg, const TomlTable& table) {
    std::vector<std::string> unknown;
    for (const auto& [key, v] : table) {
        if (key == "model") cfg.model = v.raw;
        else if (key == "method") cfg.method = v.raw;
        else if (key == "granularity") cfg.granularity = v.raw;
        else if (key == "sparsity") cfg.sparsities = v.as_double_list(key);
        else if (key == "seeds") cfg.seeds = v.as_uint_list(key);
        else if (key == "out_dir") cfg.out_dir = v.raw;
        else if (key == "force") cfg.force = v.as_bool(key);
        else if (key == "per_layer_budget") cfg.per_layer_budget = v.as_bool(key);
        else if (key == "rewind_epoch") cfg.rewind_epoch = static_cast<int>(v.as_int(key));
        else if (key == "bip_retrain_after") cfg.bip_retrain_after = v.as_bool(key);
        else if (key == "snip_batch") cfg.snip_batch = static_cast<int>(v.as_int(key));
        else if (key == "data.dataset") cfg.dataset = v.raw;
        else if (key == "data.blobs_classes") cfg.blobs_classes = static_cast<int>(v.as_int(key));
        else if (key == "data.blobs_per_class") cfg.blobs_per_class = static_cast<int>(v.as_int(key));
        else if (key == "data.blobs_dim") cfg.blobs_dim = static_cast<int>(v.as_int(key));
        else if (key == "data.blobs_separation") cfg.blobs_separation = v.as_double(key);
        else if (key == "data.data_seed") cfg.data_seed = static_cast<std::uint64_t>(v.as_int(key));
        else if (key == "data.idx_images") cfg.idx_images = v.raw;
        else if (key == "data.idx_labels") cfg.idx_labels = v.raw;
        else if (key == "data.idx_test_images") cfg.idx_test_images = v.raw;
        else if (key == "data.idx_test_labels") cfg.idx_test_labels = v.raw;
        else if (key == "data.idx_pool8") cfg.idx_pool8 = v.as_bool(key);
        else if (key == "dense.epochs") cfg.dense.epochs = static_cast<int>(v.as_int(key));
        else if (key == "dense.lr") cfg.dense.lr = v.as_double(key);
        else if (key == "dense.schedule") cfg.dense.schedule = parse_schedule(v.raw);
        else if (key == "dense.weight_decay") cfg.dense.weight_decay = v.as_double(key);
        else if (key == "dense.batch_size") cfg.dense.batch_size = static_cast<int>(v.as_int(key));
        else if (key == "retrain.epochs") cfg.retrain.epochs = static_cast<int>(v.as_int(key));
        else if (key == "retrain.lr") cfg.retrain.lr = v.as_double(key);
        else if (key == "retrain.schedule") cfg.retrain.schedule = parse_schedule(v.raw);
        else if (key == "retrain.weight_decay") cfg.retrain.weight_decay = v.as_double(key);
        else if (key == "retrain.batch_size") cfg.retrain.batch_size = static_cast<int>(v.as_int(key));
        else if (key == "bip.alpha") cfg.bip.alpha = v.as_double(key);
        else if (key == "bip.beta") cfg.bip.beta = v.as_double(key);
        else if (key == "bip.gamma") cfg.bip.gamma = v.as_double(key);
        else if (key == "bip.theta_decay") cfg.bip.theta_decay = v.as_double(key);
        else if (key == "bip.lower_steps") cfg.bip.lower_steps = static_cast<int>(v.as_int(key));
        else if (key == "bip.epochs") cfg.bip.epochs = static_cast<int>(v.as_int(key));
        else if (key == "bip.batch_size") cfg.bip.batch_size = static_cast<int>(v.as_int(key));
        else if (key == "bip.batch_scheme") cfg.bip.batch_scheme = parse_batch_scheme(v.raw);
        else if (key == "bip.ig_free") cfg.bip.ig_free = v.as_bool(key);
        else if (key == "bip.group_reduce_mean") cfg.bip.group_reduce_mean = v.as_bool(key);
        else if (key == "bip.ig_binary_mask") cfg.bip.ig_binary_mask = v.as_bool(key);
        else if (key == "bip.debug_checks") cfg.bip.debug_checks = v.as_bool(key);
        else if (key == "imp.rounds") cfg.imp.rounds = static_cast<int>(v.as_int(key));
        else if (key == "imp.retrain_epochs") cfg.imp.retrain_epochs = static_cast<int>(v.as_int(key));
        else unknown.push_back(key);
    }
    if (!unknown.empty()) {
        std::string msg = "unknown config key(s):";
        for (const std::string& k : unknown) msg += " '" + k + "'";
        throw config_error(msg);
    }
}

}  // namespace bip

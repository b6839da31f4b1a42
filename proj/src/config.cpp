// SPDX-License-Identifier: Apache-2.0
#include "lfpsoc/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>

#include "lfpsoc/errors.hpp"

namespace lfp {

namespace {

std::string trim(const std::string& s)
{
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse(std::istream& in)
{
    Config c;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("expected key=value", lineno);
        std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw ParseError("empty key", lineno);
        c.values_[key] = trim(line.substr(eq + 1));
    }
    return c;
}

Config Config::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    return parse(in);
}

void Config::set(const std::string& key, const std::string& value)
{
    values_[key] = value;
}

bool Config::has(const std::string& key) const
{
    return values_.count(key) != 0;
}

const std::string* Config::lookup(const std::string& key) const
{
    auto it = values_.find(key);
    if (it == values_.end())
        return nullptr;
    used_.insert(key);
    return &it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const
{
    const auto* v = lookup(key);
    return v ? *v : fallback;
}

double Config::get_double(const std::string& key, double fallback) const
{
    auto v = get_optional_double(key);
    return v ? *v : fallback;
}

std::optional<double> Config::get_optional_double(const std::string& key) const
{
    const auto* v = lookup(key);
    if (!v)
        return std::nullopt;
    double d = 0.0;
    const char* b = v->data();
    const char* e = v->data() + v->size();
    if (b != e && *b == '+')
        ++b;
    auto [p, ec] = std::from_chars(b, e, d);
    if (v->empty() || ec != std::errc() || p != e)
        throw ConfigError("key '" + key + "': expected a number, got '" + *v + "'");
    return d;
}

std::size_t Config::get_size(const std::string& key, std::size_t fallback) const
{
    return static_cast<std::size_t>(get_u64(key, fallback));
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const
{
    const auto* v = lookup(key);
    if (!v)
        return fallback;
    std::uint64_t n = 0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), n);
    if (v->empty() || ec != std::errc() || p != v->data() + v->size())
        throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + *v + "'");
    return n;
}

bool Config::get_bool(const std::string& key, bool fallback) const
{
    const auto* v = lookup(key);
    if (!v)
        return fallback;
    std::string s = *v;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "1" || s == "true" || s == "yes" || s == "on")
        return true;
    if (s == "0" || s == "false" || s == "no" || s == "off")
        return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + *v + "'");
}

std::vector<std::string> Config::unused_keys() const
{
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
        if (!used_.count(k))
            out.push_back(k);
    return out;
}

}  // namespace lfp

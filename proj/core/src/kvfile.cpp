// Copyright 2026 the asrlink authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "asrlink/kvfile.hpp"

#include <fstream>
#include <sstream>

#include "asrlink/common.hpp"

namespace asrlink {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

bool KvFile::Section::has(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return true;
  return false;
}

std::string KvFile::Section::get(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return v;
  throw ConfigError("missing key '" + key + "' in section [" + name + "]");
}

std::string KvFile::Section::get_or(const std::string& key, const std::string& d) const {
  for (const auto& [k, v] : entries)
    if (k == key) return v;
  return d;
}

double KvFile::Section::get_double(const std::string& key) const {
  const std::string s = get(key);
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' in [" + name + "] is not a number: '" + s + "'");
  }
}

double KvFile::Section::get_double_or(const std::string& key, double d) const {
  return has(key) ? get_double(key) : d;
}

std::int64_t KvFile::Section::get_int(const std::string& key) const {
  const std::string s = get(key);
  try {
    std::size_t pos = 0;
    std::int64_t v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' in [" + name + "] is not an integer: '" + s + "'");
  }
}

std::int64_t KvFile::Section::get_int_or(const std::string& key, std::int64_t d) const {
  return has(key) ? get_int(key) : d;
}

std::uint64_t KvFile::Section::get_u64_or(const std::string& key, std::uint64_t d) const {
  if (!has(key)) return d;
  const std::string s = get(key);
  try {
    std::size_t pos = 0;
    std::uint64_t v = std::stoull(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' in [" + name + "] is not an unsigned integer: '" + s + "'");
  }
}

void KvFile::Section::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries.emplace_back(key, value);
}

KvFile KvFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

KvFile KvFile::parse_text(const std::string& text, const std::string& origin) {
  KvFile f;
  Section* cur = nullptr;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
      std::string name = trim(t.substr(1, t.size() - 2));
      if (name.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
      cur = &f.section(name);
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value', got '" + t + "'");
    if (cur == nullptr)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": key outside of any [section]");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    cur->set(key, value);
  }
  return f;
}

KvFile::Section& KvFile::section(const std::string& name) {
  for (auto& s : sections_)
    if (s.name == name) return s;
  sections_.push_back(Section{name, {}});
  return sections_.back();
}

const KvFile::Section* KvFile::find(const std::string& name) const {
  for (const auto& s : sections_)
    if (s.name == name) return &s;
  return nullptr;
}

const KvFile::Section& KvFile::require(const std::string& name) const {
  const Section* s = find(name);
  if (!s) throw ConfigError("missing required section [" + name + "]");
  return *s;
}

std::vector<const KvFile::Section*> KvFile::sections_with_prefix(const std::string& prefix) const {
  std::vector<const Section*> out;
  for (const auto& s : sections_)
    if (s.name.rfind(prefix, 0) == 0) out.push_back(&s);
  return out;
}

std::string KvFile::to_text() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& s : sections_) {
    if (!first) out << "\n";
    first = false;
    out << "[" << s.name << "]\n";
    for (const auto& [k, v] : s.entries) out << k << " = " << v << "\n";
  }
  return out.str();
}

void KvFile::write_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write file: " + path);
  out << to_text();
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace asrlink

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

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace asrlink {

// Flat sectioned key-value text format used for experiment configs, corpus
// metadata, and encoder parameter files:
//
//   [section name]
//   key = value
//   # comment
//
// Section order and key order within a section are preserved on write.
class KvFile {
 public:
  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    bool has(const std::string& key) const;
    std::string get(const std::string& key) const;                      // throws ConfigError if absent
    std::string get_or(const std::string& key, const std::string& d) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double d) const;
    std::int64_t get_int(const std::string& key) const;
    std::int64_t get_int_or(const std::string& key, std::int64_t d) const;
    std::uint64_t get_u64_or(const std::string& key, std::uint64_t d) const;
    void set(const std::string& key, const std::string& value);
  };

  static KvFile parse_file(const std::string& path);
  static KvFile parse_text(const std::string& text, const std::string& origin = "<string>");

  Section& section(const std::string& name);          // creates if absent
  const Section* find(const std::string& name) const; // nullptr if absent
  const Section& require(const std::string& name) const;  // throws ConfigError
  std::vector<const Section*> sections_with_prefix(const std::string& prefix) const;
  const std::vector<Section>& sections() const { return sections_; }

  std::string to_text() const;
  void write_file(const std::string& path) const;

 private:
  std::vector<Section> sections_;
};

std::vector<std::string> split_ws(const std::string& s);

}  // namespace asrlink

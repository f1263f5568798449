// Copyright 2026 The qlml Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qlml/config.hpp"

namespace qlml {

// Records keep insertion order so equal runs serialize byte-identically.
using Record = nlohmann::ordered_json;

// Newline-delimited record stream with a trailing summary line. Writing is
// atomic: a temp file in the same directory is renamed over the target.
class ReportWriter {
 public:
  void add(Record r) {
    if (r.contains("verdict")) {
      if (r["verdict"] == "PASS")
        ++pass_;
      else
        ++fail_;
    }
    records_.push_back(std::move(r));
  }

  int pass_count() const { return pass_; }
  int fail_count() const { return fail_; }
  const std::vector<Record>& records() const { return records_; }

  std::string to_string() const {
    std::string out;
    for (const Record& r : records_) {
      out += r.dump();
      out += '\n';
    }
    Record summary;
    summary["record"] = "summary";
    summary["pass"] = pass_;
    summary["fail"] = fail_;
    out += summary.dump();
    out += '\n';
    return out;
  }

  void write_atomic(const std::string& path) const {
    std::string tmp = path + ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw ConfigError("report: cannot open " + tmp);
      f << to_string();
      if (!f.good()) throw ConfigError("report: write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
      throw ConfigError("report: rename failed for " + path);
  }

 private:
  std::vector<Record> records_;
  int pass_ = 0;
  int fail_ = 0;
};

}  // namespace qlml

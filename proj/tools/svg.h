// Copyright 2026 The InherNet Authors
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

#ifndef INHERNET_TOOLS_SVG_H_
#define INHERNET_TOOLS_SVG_H_

#include <string>
#include <vector>

namespace inhernet::tools {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

// Self-contained SVG line chart. Non-finite points are skipped.
std::string render_svg(const Chart& chart);

}  // namespace inhernet::tools

#endif  // INHERNET_TOOLS_SVG_H_

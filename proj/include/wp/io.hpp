#pragma once

#include <iosfwd>
#include <string>

#include "wp/fbi.hpp"
#include "wp/field.hpp"

namespace wp {

// JSON schemas:
//   SampledField   {"L", "N", "re": [...], "im": [...]}
//   Metric         field schema + {"M_bound", "kind", "params", "seed"}
//   PhaseSpaceField{"lambda", "x": [...], "xi": [...], "re": [[..]], "im": [[..]]}

std::string to_json(const SampledField& f);
SampledField field_from_json(const std::string& text);

std::string to_json(const Metric& m);
Metric metric_from_json(const std::string& text);

std::string to_json(const PhaseSpaceField& f);

/// rows "x,re,im"
void write_csv(const SampledField& f, std::ostream& out);

/// |F(x,xi)| heat-map rows "x,xi,abs"
void write_heatmap_csv(const PhaseSpaceField& f, std::ostream& out);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace wp

#pragma once

#include <filesystem>
#include <iosfwd>

#include "drst/data_model.hpp"

namespace drst {

// One row per sample, header row required. Covariate columns come first;
// labeled files end with a column named "y".
UnlabeledSet read_unlabeled_csv(std::istream& in);
LabeledSet read_labeled_csv(std::istream& in);
UnlabeledSet load_unlabeled_csv(const std::filesystem::path& path);
LabeledSet load_labeled_csv(const std::filesystem::path& path);

void write_unlabeled_csv(std::ostream& out, const UnlabeledSet& set);
void write_labeled_csv(std::ostream& out, const LabeledSet& set);

}  // namespace drst

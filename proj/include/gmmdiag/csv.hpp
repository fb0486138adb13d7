// gmmdiag/csv.hpp
//
// Headerless CSV: one sample per row, comma-separated decimal reals.

#pragma once

#include <filesystem>
#include <iosfwd>

#include "gmmdiag/dataset.hpp"

namespace gmmdiag {

// Blank lines are skipped. Throws DataError on ragged rows, unparsable or
// non-finite fields, or an input without samples.
Dataset parse_csv(std::istream& in);
Dataset read_csv(const std::filesystem::path& path);

// 17 significant digits per value, so read_csv(write_csv(X)) == X.
void write_csv(std::ostream& out, const Dataset& data);
void write_csv(const std::filesystem::path& path, const Dataset& data);

}  // namespace gmmdiag

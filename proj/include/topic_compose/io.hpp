#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "topic_compose/common.hpp"
#include "topic_compose/model.hpp"

namespace topic_compose {

// Dense TSV: "<rows>\t<cols>" header, then one tab-separated line per row.
Matrix read_dense_tsv(const std::filesystem::path& path);
void write_dense_tsv(const std::filesystem::path& path, const Matrix& matrix);
std::string format_dense_tsv(const Matrix& matrix);

// Sparse corpus: "<M>\t<N>\t<NNZ>" header, then "<doc>\t<word>\t<count>"
// lines with 1-based doc and word indices.
Corpus read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);

/// %.17g text, which parses back to the identical double.
std::string format_double(double value);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// Hex SHA-256 of the file contents.
std::string file_sha256(const std::filesystem::path& path);

}  // namespace topic_compose

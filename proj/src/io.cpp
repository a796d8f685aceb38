#include "topic_compose/io.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

namespace topic_compose {

namespace {

// Splits `line` on tabs without allocating new strings.
std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

template <typename T>
T parse_field(std::string_view field, const std::filesystem::path& path, std::size_t line_no) {
  T value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty()) {
    throw ValidationError(fmt::format("{}:{}: cannot parse '{}'", path.string(), line_no, field));
  }
  return value;
}

class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path) : path_(path), text_(read_file(path)) {}

  bool next(std::string_view& line) {
    if (pos_ >= text_.size()) return false;
    const std::size_t nl = text_.find('\n', pos_);
    const std::size_t end = nl == std::string::npos ? text_.size() : nl;
    line = strip_cr(std::string_view(text_).substr(pos_, end - pos_));
    pos_ = end + 1;
    ++line_no_;
    return true;
  }

  std::size_t line_no() const { return line_no_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::string text_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write '{}'", tmp.string()));
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(fmt::format("write failed for '{}'", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(fmt::format("cannot rename '{}' to '{}': {}", tmp.string(), path.string(), ec.message()));
}

std::string format_double(double value) { return fmt::format("{:.17g}", value); }

Matrix read_dense_tsv(const std::filesystem::path& path) {
  LineReader reader(path);
  std::string_view line;
  if (!reader.next(line)) throw ValidationError(fmt::format("{}: empty file", path.string()));
  const auto header = split_tabs(line);
  if (header.size() != 2) {
    throw ValidationError(fmt::format("{}:1: expected '<rows>\\t<cols>' header", path.string()));
  }
  const auto rows = parse_field<Index>(header[0], path, 1);
  const auto cols = parse_field<Index>(header[1], path, 1);
  if (rows < 0 || cols < 0) throw ValidationError(fmt::format("{}:1: negative dimension", path.string()));

  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (!reader.next(line)) {
      throw ValidationError(fmt::format("{}: expected {} rows, found {}", path.string(), rows, i));
    }
    const auto fields = split_tabs(line);
    if (static_cast<Index>(fields.size()) != cols) {
      throw ValidationError(fmt::format("{}:{}: expected {} columns, found {}", path.string(), reader.line_no(), cols,
                                        fields.size()));
    }
    for (Index j = 0; j < cols; ++j) m(i, j) = parse_field<double>(fields[j], path, reader.line_no());
  }
  while (reader.next(line)) {
    if (!line.empty()) {
      throw ValidationError(fmt::format("{}:{}: trailing data after {} rows", path.string(), reader.line_no(), rows));
    }
  }
  return m;
}

std::string format_dense_tsv(const Matrix& matrix) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "{}\t{}\n", matrix.rows(), matrix.cols());
  for (Index i = 0; i < matrix.rows(); ++i) {
    for (Index j = 0; j < matrix.cols(); ++j) {
      if (j > 0) buf.push_back('\t');
      fmt::format_to(std::back_inserter(buf), "{:.17g}", matrix(i, j));
    }
    buf.push_back('\n');
  }
  return fmt::to_string(buf);
}

void write_dense_tsv(const std::filesystem::path& path, const Matrix& matrix) {
  write_file_atomic(path, format_dense_tsv(matrix));
}

Corpus read_corpus(const std::filesystem::path& path) {
  LineReader reader(path);
  std::string_view line;
  if (!reader.next(line)) throw ValidationError(fmt::format("{}: empty file", path.string()));
  const auto header = split_tabs(line);
  if (header.size() != 3) {
    throw ValidationError(fmt::format("{}:1: expected '<M>\\t<N>\\t<NNZ>' header", path.string()));
  }
  const auto docs = parse_field<Index>(header[0], path, 1);
  const auto vocab = parse_field<Index>(header[1], path, 1);
  const auto nnz = parse_field<Index>(header[2], path, 1);
  if (nnz < 0) throw ValidationError(fmt::format("{}:1: negative entry count", path.string()));

  std::vector<Corpus::Entry> entries;
  entries.reserve(static_cast<std::size_t>(nnz));
  for (Index e = 0; e < nnz; ++e) {
    if (!reader.next(line)) {
      throw ValidationError(fmt::format("{}: expected {} entries, found {}", path.string(), nnz, e));
    }
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw ValidationError(fmt::format("{}:{}: expected '<doc>\\t<word>\\t<count>'", path.string(), reader.line_no()));
    }
    entries.push_back({parse_field<Index>(fields[0], path, reader.line_no()) - 1,
                       parse_field<Index>(fields[1], path, reader.line_no()) - 1,
                       parse_field<std::int64_t>(fields[2], path, reader.line_no())});
  }
  while (reader.next(line)) {
    if (!line.empty()) {
      throw ValidationError(fmt::format("{}:{}: trailing data after {} entries", path.string(), reader.line_no(), nnz));
    }
  }
  return Corpus(docs, vocab, std::move(entries));
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "{}\t{}\t{}\n", corpus.num_docs(), corpus.vocab_size(), corpus.nnz());
  for (Index m = 0; m < corpus.num_docs(); ++m) {
    const auto words = corpus.words(m);
    const auto counts = corpus.counts(m);
    for (std::size_t j = 0; j < words.size(); ++j) {
      fmt::format_to(std::back_inserter(buf), "{}\t{}\t{}\n", m + 1, words[j] + 1, counts[j]);
    }
  }
  write_file_atomic(path, fmt::to_string(buf));
}

std::string file_sha256(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(fmt::format("sha256 failed for '{}'", path.string()));
  }
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

}  // namespace topic_compose

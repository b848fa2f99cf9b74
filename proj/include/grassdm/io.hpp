#pragma once

#include "grassdm/types.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace grassdm {

/// Parses comma-separated numeric rows. Blank lines are skipped; every other
/// row must have the same number of fields. Throws ParseError (with 1-based
/// row/column) on malformed or non-finite fields and RaggedRows on width
/// mismatch.
Matrix parse_csv_matrix(std::string_view text);
Matrix load_csv_matrix(const std::filesystem::path& path);

/// CSV text with 17 significant digits, so values round-trip exactly.
std::string format_csv_matrix(const Matrix& m, const std::vector<std::string>& header = {});
void write_csv_matrix(const std::filesystem::path& path, const Matrix& m,
                      const std::vector<std::string>& header = {});

/// Grayscale PGM (P2 or P5, maxval up to 65535) scaled to [0, 1].
Matrix parse_pgm_image(std::string_view bytes);
Matrix load_pgm_image(const std::filesystem::path& path);

enum class PgmEncoding { Ascii, Binary };
/// Encodes values in [0, 1] with the given maxval (rounded to nearest).
std::string format_pgm(const Matrix& m, PgmEncoding encoding, int maxval = 255);
void write_pgm(const std::filesystem::path& path, const Matrix& m, PgmEncoding encoding, int maxval = 255);

/// Dispatches on extension: .csv, .pgm.
Matrix load_matrix_file(const std::filesystem::path& path);

struct LabeledMatrixDataset {
    std::vector<Matrix> samples;
    std::vector<std::string> labels;
    std::vector<std::filesystem::path> files;
    std::filesystem::path root;
    std::vector<std::string> classes;  // sorted
    std::vector<Index> counts;         // per class
};

/// One subdirectory per class; files matching the glob `pattern` inside it
/// are loaded in lexicographic order. Throws EmptyDataset when nothing
/// matches or a class directory holds no matching file, HeterogeneousShapes
/// when shapes differ.
LabeledMatrixDataset load_labeled_directory(const std::filesystem::path& root, const std::string& pattern = "*");

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never see partial content.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace grassdm

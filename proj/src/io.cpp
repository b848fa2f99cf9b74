#include "grassdm/io.hpp"

#include "grassdm/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fnmatch.h>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace grassdm {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    fs::create_directories(dir);
    const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InvalidArgument("cannot write '" + tmp.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw InvalidArgument("short write to '" + tmp.string() + "'");
        }
    }
    fs::rename(tmp, path);
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string where(std::size_t row, std::size_t col) {
    return "row " + std::to_string(row) + ", column " + std::to_string(col);
}

}  // namespace

Matrix parse_csv_matrix(std::string_view text) {
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        const std::string_view line = trim(text.substr(pos, end - pos));
        ++line_no;
        pos = end + 1;
        if (line.empty()) {
            if (end == text.size()) break;
            continue;
        }
        std::vector<double> row;
        std::size_t start = 0;
        std::size_t col = 0;
        while (true) {
            ++col;
            const std::size_t comma = line.find(',', start);
            const std::string_view field =
                trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            double value = 0.0;
            const char* first = field.data();
            const char* last = field.data() + field.size();
            if (!field.empty() && *first == '+') ++first;
            const auto [ptr, ec] = std::from_chars(first, last, value);
            if (field.empty() || ec != std::errc{} || ptr != last)
                throw ParseError("csv: cannot parse '" + std::string(field) + "' at " + where(line_no, col));
            if (!std::isfinite(value)) throw ParseError("csv: non-finite value at " + where(line_no, col));
            row.push_back(value);
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw RaggedRows("csv: row " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                             " fields, expected " + std::to_string(rows.front().size()));
        rows.push_back(std::move(row));
        if (end == text.size()) break;
    }
    if (rows.empty()) throw ParseError("csv: no data rows");
    Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) out(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    return out;
}

Matrix load_csv_matrix(const fs::path& path) {
    try {
        return parse_csv_matrix(read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const RaggedRows& e) {
        throw RaggedRows(path.string() + ": " + e.what());
    }
}

std::string format_csv_matrix(const Matrix& m, const std::vector<std::string>& header) {
    std::string out;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j) out += ',';
        out += header[j];
    }
    if (!header.empty()) out += '\n';
    char buf[64];
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, m(i, j), std::chars_format::general, 17);
            out.append(buf, ptr);
        }
        out += '\n';
    }
    return out;
}

void write_csv_matrix(const fs::path& path, const Matrix& m, const std::vector<std::string>& header) {
    write_file_atomic(path, format_csv_matrix(m, header));
}

namespace {

class PgmReader {
public:
    explicit PgmReader(std::string_view bytes) : bytes_(bytes) {}

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const char c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
                ++pos_;
            } else {
                return;
            }
        }
    }

    long header_int(const char* what) {
        skip_space_and_comments();
        long value = 0;
        const auto [ptr, ec] = std::from_chars(bytes_.data() + pos_, bytes_.data() + bytes_.size(), value);
        if (ec != std::errc{} || ptr == bytes_.data() + pos_)
            throw CorruptHeader(std::string("pgm: bad or missing ") + what);
        pos_ = static_cast<std::size_t>(ptr - bytes_.data());
        return value;
    }

    long pixel_int(Index index) {
        skip_space_and_comments();
        long value = 0;
        const auto [ptr, ec] = std::from_chars(bytes_.data() + pos_, bytes_.data() + bytes_.size(), value);
        if (ec != std::errc{} || ptr == bytes_.data() + pos_)
            throw ParseError("pgm: truncated or malformed pixel data at pixel " + std::to_string(index));
        pos_ = static_cast<std::size_t>(ptr - bytes_.data());
        return value;
    }

    std::string_view magic() {
        if (bytes_.size() < 2) throw UnsupportedFormat("pgm: file too short");
        pos_ = 2;
        return bytes_.substr(0, 2);
    }

    void single_whitespace() {
        if (pos_ >= bytes_.size()) throw CorruptHeader("pgm: missing raster");
        const char c = bytes_[pos_];
        if (!(c == ' ' || c == '\t' || c == '\n' || c == '\r'))
            throw CorruptHeader("pgm: expected whitespace after maxval");
        ++pos_;
    }

    [[nodiscard]] std::string_view rest() const { return bytes_.substr(pos_); }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

Matrix parse_pgm_image(std::string_view bytes) {
    PgmReader reader(bytes);
    const std::string_view magic = reader.magic();
    if (magic != "P2" && magic != "P5") throw UnsupportedFormat("pgm: unsupported magic '" + std::string(magic) + "'");
    const long width = reader.header_int("width");
    const long height = reader.header_int("height");
    const long maxval = reader.header_int("maxval");
    if (width <= 0 || height <= 0) throw CorruptHeader("pgm: non-positive dimensions");
    if (maxval <= 0 || maxval > 65535) throw CorruptHeader("pgm: maxval out of range");

    Matrix out(height, width);
    const auto scale = static_cast<double>(maxval);
    if (magic == "P2") {
        for (Index i = 0; i < height; ++i)
            for (Index j = 0; j < width; ++j) {
                const long v = reader.pixel_int(i * width + j);
                if (v < 0 || v > maxval) throw ParseError("pgm: pixel value exceeds maxval");
                out(i, j) = static_cast<double>(v) / scale;
            }
        return out;
    }

    reader.single_whitespace();
    const std::string_view raster = reader.rest();
    const std::size_t depth = maxval > 255 ? 2 : 1;
    const std::size_t needed = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * depth;
    if (raster.size() < needed)
        throw ParseError("pgm: truncated raster (" + std::to_string(raster.size()) + " of " +
                         std::to_string(needed) + " bytes)");
    std::size_t k = 0;
    for (Index i = 0; i < height; ++i)
        for (Index j = 0; j < width; ++j) {
            long v = static_cast<unsigned char>(raster[k++]);
            if (depth == 2) v = (v << 8) | static_cast<unsigned char>(raster[k++]);
            if (v > maxval) throw ParseError("pgm: pixel value exceeds maxval");
            out(i, j) = static_cast<double>(v) / scale;
        }
    return out;
}

Matrix load_pgm_image(const fs::path& path) {
    const std::string bytes = read_file(path);
    try {
        return parse_pgm_image(bytes);
    } catch (const Error& e) {
        if (e.kind() == "UnsupportedFormat") throw UnsupportedFormat(path.string() + ": " + e.what());
        if (e.kind() == "CorruptHeader") throw CorruptHeader(path.string() + ": " + e.what());
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::string format_pgm(const Matrix& m, PgmEncoding encoding, int maxval) {
    if (maxval <= 0 || maxval > 65535) throw InvalidArgument("format_pgm: maxval out of range");
    if (m.size() == 0) throw InvalidArgument("format_pgm: empty image");
    std::string out = encoding == PgmEncoding::Ascii ? "P2\n" : "P5\n";
    out += std::to_string(m.cols()) + " " + std::to_string(m.rows()) + "\n" + std::to_string(maxval) + "\n";
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            const double clamped = std::clamp(m(i, j), 0.0, 1.0);
            const auto v = static_cast<long>(std::lround(clamped * maxval));
            if (encoding == PgmEncoding::Ascii) {
                out += std::to_string(v);
                out += j + 1 == m.cols() ? '\n' : ' ';
            } else if (maxval > 255) {
                out += static_cast<char>((v >> 8) & 0xff);
                out += static_cast<char>(v & 0xff);
            } else {
                out += static_cast<char>(v);
            }
        }
    }
    return out;
}

void write_pgm(const fs::path& path, const Matrix& m, PgmEncoding encoding, int maxval) {
    write_file_atomic(path, format_pgm(m, encoding, maxval));
}

Matrix load_matrix_file(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".csv") return load_csv_matrix(path);
    if (ext == ".pgm") return load_pgm_image(path);
    throw UnsupportedFormat("unsupported file type '" + path.string() + "' (expected .csv or .pgm)");
}

LabeledMatrixDataset load_labeled_directory(const fs::path& root, const std::string& pattern) {
    if (!fs::is_directory(root)) throw EmptyDataset("dataset root '" + root.string() + "' is not a directory");

    std::vector<fs::path> class_dirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory()) class_dirs.push_back(entry.path());
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.empty()) throw EmptyDataset("dataset root '" + root.string() + "' has no class directories");

    LabeledMatrixDataset out;
    out.root = root;
    for (const auto& dir : class_dirs) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file()) continue;
            const std::string name = entry.path().filename().string();
            if (::fnmatch(pattern.c_str(), name.c_str(), 0) == 0) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        if (files.empty())
            throw EmptyDataset("class directory '" + dir.string() + "' has no files matching '" + pattern + "'");
        const std::string label = dir.filename().string();
        out.classes.push_back(label);
        out.counts.push_back(static_cast<Index>(files.size()));
        for (const auto& file : files) {
            Matrix m = load_matrix_file(file);
            if (!out.samples.empty() &&
                (m.rows() != out.samples.front().rows() || m.cols() != out.samples.front().cols()))
                throw HeterogeneousShapes("'" + file.string() + "' is " + std::to_string(m.rows()) + "x" +
                                          std::to_string(m.cols()) + ", expected " +
                                          std::to_string(out.samples.front().rows()) + "x" +
                                          std::to_string(out.samples.front().cols()));
            out.samples.push_back(std::move(m));
            out.labels.push_back(label);
            out.files.push_back(file);
        }
    }
    return out;
}

}  // namespace grassdm

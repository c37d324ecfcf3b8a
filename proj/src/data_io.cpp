#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "entk/data.hpp"
#include "entk/errors.hpp"

namespace entk::data {

static_assert(std::endian::native == std::endian::little, "ENTK1 I/O assumes a little-endian host");

namespace {

constexpr char kMagic[5] = {'E', 'N', 'T', 'K', '1'};

}  // namespace

std::size_t Tensor::size() const
{
    std::size_t n = 1;
    for (auto d : dims) n *= static_cast<std::size_t>(d);
    return n;
}

void write_tensor(const std::string& path, const Tensor& t)
{
    if (t.dims.size() > 255) throw ShapeError("tensor rank above 255");
    if (t.size() != t.data.size()) throw ShapeError("tensor payload does not match its dims");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os.write(kMagic, 5);
    auto rank = static_cast<std::uint8_t>(t.dims.size());
    os.write(reinterpret_cast<const char*>(&rank), 1);
    os.write(reinterpret_cast<const char*>(t.dims.data()), static_cast<std::streamsize>(t.dims.size() * 8));
    os.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * 8));
    if (!os) throw IoError("write to '" + path + "' failed");
}

Tensor read_tensor(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path + "'");
    char magic[5] = {};
    is.read(magic, 5);
    if (is.gcount() < 5 || std::memcmp(magic, kMagic, 5) != 0) {
        is.close();
        return read_csv(path);
    }
    std::uint8_t rank = 0;
    is.read(reinterpret_cast<char*>(&rank), 1);
    Tensor t;
    t.dims.resize(rank);
    is.read(reinterpret_cast<char*>(t.dims.data()), static_cast<std::streamsize>(rank) * 8);
    if (!is) throw IoError("'" + path + "': truncated header");
    is.seekg(0, std::ios::end);
    auto end = static_cast<std::uint64_t>(is.tellg());
    std::uint64_t header = 6 + 8ull * rank;
    long double count = 1;
    for (auto d : t.dims) count *= static_cast<long double>(d);
    if (count * 8 != static_cast<long double>(end - header))
        throw IoError("'" + path + "': payload length does not match dims");
    t.data.resize(t.size());
    is.seekg(static_cast<std::streamoff>(header));
    is.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * 8));
    if (!is) throw IoError("'" + path + "': read failed");
    return t;
}

void write_csv(const std::string& path, const Tensor& t)
{
    if (t.dims.empty() || t.dims.size() > 2) throw ShapeError("CSV holds rank 1 or 2 tensors only");
    if (t.size() != t.data.size()) throw ShapeError("tensor payload does not match its dims");
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    std::size_t rows = t.dims[0], cols = t.dims.size() == 2 ? t.dims[1] : 1;
    os << std::setprecision(17);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) os << (j ? "," : "") << t.data[i * cols + j];
        os << '\n';
    }
    if (!os) throw IoError("write to '" + path + "' failed");
}

Tensor read_csv(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw IoError("cannot open '" + path + "'");
    Tensor t;
    std::string line;
    long lineno = 0;
    std::size_t cols = 0, rows = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t n = 0;
        while (std::getline(ss, cell, ',')) {
            std::size_t used = 0;
            double v;
            try {
                v = std::stod(cell, &used);
            } catch (const std::exception&) {
                throw ParseError(path, lineno, "not a number: '" + cell + "'");
            }
            while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
            if (used != cell.size()) throw ParseError(path, lineno, "not a number: '" + cell + "'");
            t.data.push_back(v);
            ++n;
        }
        if (rows == 0) cols = n;
        else if (n != cols) throw ParseError(path, lineno, "ragged row");
        ++rows;
    }
    if (cols == 1) t.dims = {rows};
    else t.dims = {rows, cols};
    return t;
}

}  // namespace entk::data

#include "flowerpose/ply.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "flowerpose/error.hpp"
#include "flowerpose/log.hpp"

static_assert(std::endian::native == std::endian::little, "binary PLY I/O assumes a little-endian host");

namespace flowerpose {
namespace {

enum class ScalarType { int8, uint8, int16, uint16, int32, uint32, float32, float64 };

std::optional<ScalarType> parse_type(const std::string& t)
{
    if (t == "char" || t == "int8") return ScalarType::int8;
    if (t == "uchar" || t == "uint8") return ScalarType::uint8;
    if (t == "short" || t == "int16") return ScalarType::int16;
    if (t == "ushort" || t == "uint16") return ScalarType::uint16;
    if (t == "int" || t == "int32") return ScalarType::int32;
    if (t == "uint" || t == "uint32") return ScalarType::uint32;
    if (t == "float" || t == "float32") return ScalarType::float32;
    if (t == "double" || t == "float64") return ScalarType::float64;
    return std::nullopt;
}

std::size_t type_size(ScalarType t)
{
    switch (t) {
    case ScalarType::int8:
    case ScalarType::uint8: return 1;
    case ScalarType::int16:
    case ScalarType::uint16: return 2;
    case ScalarType::int32:
    case ScalarType::uint32:
    case ScalarType::float32: return 4;
    case ScalarType::float64: return 8;
    }
    return 0;
}

bool is_float(ScalarType t) { return t == ScalarType::float32 || t == ScalarType::float64; }

// Scale factor mapping an integer color channel onto [0,1].
double integer_color_max(ScalarType t)
{
    switch (t) {
    case ScalarType::int8: return 127.0;
    case ScalarType::uint8: return 255.0;
    case ScalarType::int16: return 32767.0;
    case ScalarType::uint16: return 65535.0;
    case ScalarType::int32: return 2147483647.0;
    case ScalarType::uint32: return 4294967295.0;
    default: return 1.0;
    }
}

struct Property {
    std::string name;
    ScalarType type = ScalarType::float32;
    bool is_list = false;
    ScalarType count_type = ScalarType::uint8;
};

struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<Property> properties;
};

struct Header {
    PlyFormat format = PlyFormat::ascii;
    std::vector<Element> elements;
    std::size_t line_count = 0; // lines consumed, for ASCII error context
};

[[noreturn]] void fail(const std::string& what) { throw PlyError("PLY: " + what); }

Header read_header(std::istream& in)
{
    Header h;
    std::string line;
    bool saw_format = false;

    auto next_line = [&]() -> bool {
        if (!std::getline(in, line))
            return false;
        ++h.line_count;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        return true;
    };

    if (!next_line() || line != "ply")
        fail("malformed header: missing 'ply' magic (line 1)");

    while (true) {
        if (!next_line())
            fail("malformed header: missing end_header");
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        const std::string at = " (line " + std::to_string(h.line_count) + ")";
        if (kw.empty() || kw == "comment" || kw == "obj_info")
            continue;
        if (kw == "format") {
            std::string fmt, version;
            ls >> fmt >> version;
            if (fmt == "ascii")
                h.format = PlyFormat::ascii;
            else if (fmt == "binary_little_endian")
                h.format = PlyFormat::binary_little_endian;
            else if (fmt == "binary_big_endian")
                fail("binary_big_endian is not supported" + at);
            else
                fail("malformed header: unknown format '" + fmt + "'" + at);
            saw_format = true;
        } else if (kw == "element") {
            Element e;
            long long count = -1;
            ls >> e.name >> count;
            if (e.name.empty() || count < 0 || ls.fail())
                fail("malformed header: bad element line" + at);
            e.count = static_cast<std::size_t>(count);
            h.elements.push_back(std::move(e));
        } else if (kw == "property") {
            if (h.elements.empty())
                fail("malformed header: property before any element" + at);
            Property p;
            std::string type;
            ls >> type;
            if (type == "list") {
                std::string ct, it;
                ls >> ct >> it >> p.name;
                auto c = parse_type(ct);
                auto i = parse_type(it);
                if (!c || !i || p.name.empty())
                    fail("malformed header: bad list property" + at);
                p.is_list = true;
                p.count_type = *c;
                p.type = *i;
            } else {
                auto t = parse_type(type);
                ls >> p.name;
                if (!t || p.name.empty())
                    fail("malformed header: bad property '" + type + "'" + at);
                p.type = *t;
            }
            h.elements.back().properties.push_back(std::move(p));
        } else if (kw == "end_header") {
            break;
        } else {
            fail("malformed header: unexpected keyword '" + kw + "'" + at);
        }
    }
    if (!saw_format)
        fail("malformed header: missing format line");
    return h;
}

struct VertexLayout {
    std::size_t element = 0;
    std::array<int, 3> pos{-1, -1, -1};
    std::array<int, 3> col{-1, -1, -1};
};

VertexLayout locate_vertex(const Header& h)
{
    VertexLayout v;
    bool found = false;
    for (std::size_t e = 0; e < h.elements.size(); ++e) {
        if (h.elements[e].name == "vertex") {
            v.element = e;
            found = true;
            break;
        }
    }
    if (!found)
        fail("malformed header: no vertex element");

    const auto& props = h.elements[v.element].properties;
    for (int i = 0; i < static_cast<int>(props.size()); ++i) {
        const auto& n = props[i].name;
        if (props[i].is_list)
            continue;
        if (n == "x") v.pos[0] = i;
        else if (n == "y") v.pos[1] = i;
        else if (n == "z") v.pos[2] = i;
        else if (n == "red" || n == "r") v.col[0] = i;
        else if (n == "green" || n == "g") v.col[1] = i;
        else if (n == "blue" || n == "b") v.col[2] = i;
    }
    for (int i : v.pos)
        if (i < 0)
            fail("missing position properties (x, y, z)");
    for (int i : v.col)
        if (i < 0)
            fail("missing color properties");
    for (int i : v.pos)
        if (!is_float(props[i].type))
            fail("position properties must be float or double");
    return v;
}

double read_binary_scalar(std::istream& in, ScalarType t, std::streamoff& offset)
{
    std::array<char, 8> buf{};
    const auto n = type_size(t);
    if (!in.read(buf.data(), static_cast<std::streamsize>(n)))
        fail("unexpected end of binary data at byte offset " + std::to_string(offset));
    offset += static_cast<std::streamoff>(n);
    switch (t) {
    case ScalarType::int8: { std::int8_t v; std::memcpy(&v, buf.data(), 1); return v; }
    case ScalarType::uint8: { std::uint8_t v; std::memcpy(&v, buf.data(), 1); return v; }
    case ScalarType::int16: { std::int16_t v; std::memcpy(&v, buf.data(), 2); return v; }
    case ScalarType::uint16: { std::uint16_t v; std::memcpy(&v, buf.data(), 2); return v; }
    case ScalarType::int32: { std::int32_t v; std::memcpy(&v, buf.data(), 4); return v; }
    case ScalarType::uint32: { std::uint32_t v; std::memcpy(&v, buf.data(), 4); return v; }
    case ScalarType::float32: { float v; std::memcpy(&v, buf.data(), 4); return v; }
    case ScalarType::float64: { double v; std::memcpy(&v, buf.data(), 8); return v; }
    }
    return 0.0;
}

double to_color(double raw, ScalarType t)
{
    return is_float(t) ? raw : raw / integer_color_max(t);
}

void check_scale(const PointCloud& cloud)
{
    if (cloud.empty())
        return;
    const double diag = cloud.bounds().extent().norm();
    if (diag < 0.05 || diag > 10.0)
        log::warn("PLY: bounding-box diagonal " + std::to_string(diag) +
                  " m is outside [0.05, 10] m; coordinates are expected in meters");
}

} // namespace

PointCloud read_ply(std::istream& in)
{
    const Header h = read_header(in);
    const VertexLayout layout = locate_vertex(h);

    std::vector<Vec3> positions;
    std::vector<Rgb> colors;

    if (h.format == PlyFormat::ascii) {
        std::size_t line_no = h.line_count;
        std::string line;
        for (std::size_t e = 0; e <= layout.element; ++e) {
            const Element& el = h.elements[e];
            const bool is_vertex = e == layout.element;
            if (is_vertex) {
                positions.reserve(el.count);
                colors.reserve(el.count);
            }
            for (std::size_t r = 0; r < el.count; ++r) {
                if (!std::getline(in, line))
                    fail("unexpected end of file in element '" + el.name + "' (line " +
                         std::to_string(line_no + 1) + ")");
                ++line_no;
                if (!is_vertex)
                    continue;
                std::istringstream ls(line);
                std::vector<double> values(el.properties.size());
                for (std::size_t p = 0; p < el.properties.size(); ++p) {
                    const auto& prop = el.properties[p];
                    if (prop.is_list) {
                        double count = 0;
                        ls >> count;
                        for (int k = 0; k < static_cast<int>(count); ++k) {
                            double skip;
                            ls >> skip;
                        }
                        continue;
                    }
                    std::string tok;
                    if (!(ls >> tok))
                        fail("too few values on line " + std::to_string(line_no));
                    try {
                        std::size_t used = 0;
                        values[p] = std::stod(tok, &used);
                        if (used != tok.size())
                            throw std::invalid_argument(tok);
                        // a float property holds a float, whatever digits the text carries
                        if (prop.type == ScalarType::float32)
                            values[p] = static_cast<float>(values[p]);
                    } catch (const std::exception&) {
                        fail("unparsable value '" + tok + "' on line " + std::to_string(line_no));
                    }
                }
                const Vec3 pos(values[layout.pos[0]], values[layout.pos[1]], values[layout.pos[2]]);
                if (!pos.allFinite())
                    fail("non-finite coordinate on line " + std::to_string(line_no));
                const auto& props = el.properties;
                colors.push_back({to_color(values[layout.col[0]], props[layout.col[0]].type),
                                  to_color(values[layout.col[1]], props[layout.col[1]].type),
                                  to_color(values[layout.col[2]], props[layout.col[2]].type)});
                positions.push_back(pos);
            }
        }
    } else {
        std::streamoff offset = in.tellg();
        if (offset < 0)
            offset = 0;
        for (std::size_t e = 0; e <= layout.element; ++e) {
            const Element& el = h.elements[e];
            const bool is_vertex = e == layout.element;
            if (is_vertex) {
                positions.reserve(el.count);
                colors.reserve(el.count);
            }
            std::vector<double> values(el.properties.size());
            for (std::size_t r = 0; r < el.count; ++r) {
                const auto row_offset = offset;
                for (std::size_t p = 0; p < el.properties.size(); ++p) {
                    const auto& prop = el.properties[p];
                    if (prop.is_list) {
                        const auto count = static_cast<long long>(read_binary_scalar(in, prop.count_type, offset));
                        for (long long k = 0; k < count; ++k)
                            read_binary_scalar(in, prop.type, offset);
                        continue;
                    }
                    values[p] = read_binary_scalar(in, prop.type, offset);
                }
                if (!is_vertex)
                    continue;
                const Vec3 pos(values[layout.pos[0]], values[layout.pos[1]], values[layout.pos[2]]);
                if (!pos.allFinite())
                    fail("non-finite coordinate in vertex " + std::to_string(r) + " at byte offset " +
                         std::to_string(row_offset));
                const auto& props = el.properties;
                colors.push_back({to_color(values[layout.col[0]], props[layout.col[0]].type),
                                  to_color(values[layout.col[1]], props[layout.col[1]].type),
                                  to_color(values[layout.col[2]], props[layout.col[2]].type)});
                positions.push_back(pos);
            }
        }
    }

    for (std::size_t i = 0; i < colors.size(); ++i) {
        const Rgb& c = colors[i];
        for (double v : {c.r, c.g, c.b})
            if (!(v >= 0.0 && v <= 1.0))
                fail("color of vertex " + std::to_string(i) + " outside [0,1]");
    }
    return PointCloud(std::move(positions), std::move(colors));
}

PointCloud load_ply(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw PlyError("PLY: cannot open '" + path.string() + "'");
    try {
        PointCloud cloud = read_ply(in);
        check_scale(cloud);
        return cloud;
    } catch (const PlyError& e) {
        throw PlyError(path.string() + ": " + e.what());
    }
}

void write_ply(std::ostream& out, const PointCloud& cloud, const PlyWriteOptions& options)
{
    const bool exact = options.precision == PlyPrecision::exact;
    const bool ascii = options.format == PlyFormat::ascii;
    const char* pos_type = exact ? "double" : "float";
    const char* col_type = exact ? "double" : "uchar";

    out << "ply\n"
        << "format " << (ascii ? "ascii" : "binary_little_endian") << " 1.0\n"
        << "element vertex " << cloud.size() << "\n"
        << "property " << pos_type << " x\n"
        << "property " << pos_type << " y\n"
        << "property " << pos_type << " z\n"
        << "property " << col_type << " red\n"
        << "property " << col_type << " green\n"
        << "property " << col_type << " blue\n"
        << "end_header\n";

    auto quantize = [](double c) { return static_cast<std::uint8_t>(std::lround(c * 255.0)); };

    if (ascii) {
        out.precision(exact ? 17 : 9);
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const auto& p = cloud.position(i);
            const auto& c = cloud.color(i);
            if (exact) {
                out << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << c.r << ' ' << c.g << ' ' << c.b << '\n';
            } else {
                out << static_cast<float>(p.x()) << ' ' << static_cast<float>(p.y()) << ' '
                    << static_cast<float>(p.z()) << ' ' << int(quantize(c.r)) << ' ' << int(quantize(c.g)) << ' '
                    << int(quantize(c.b)) << '\n';
            }
        }
        return;
    }

    auto put = [&out](const auto& v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto& p = cloud.position(i);
        const auto& c = cloud.color(i);
        if (exact) {
            put(p.x()); put(p.y()); put(p.z());
            put(c.r); put(c.g); put(c.b);
        } else {
            put(static_cast<float>(p.x())); put(static_cast<float>(p.y())); put(static_cast<float>(p.z()));
            put(quantize(c.r)); put(quantize(c.g)); put(quantize(c.b));
        }
    }
}

void save_ply(const std::filesystem::path& path, const PointCloud& cloud, const PlyWriteOptions& options)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw PlyError("PLY: cannot write '" + path.string() + "'");
    write_ply(out, cloud, options);
    if (!out)
        throw PlyError("PLY: write failed for '" + path.string() + "'");
}

} // namespace flowerpose

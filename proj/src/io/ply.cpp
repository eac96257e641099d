// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/io/binary.hpp>
#include <voxsplat/io/ply.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace voxsplat::io {
namespace {

enum class Format { kAscii, kLittle, kBig };

std::optional<PlyType> parse_type(const std::string& t) {
    if (t == "char" || t == "int8") return PlyType::kInt8;
    if (t == "uchar" || t == "uint8") return PlyType::kUInt8;
    if (t == "short" || t == "int16") return PlyType::kInt16;
    if (t == "ushort" || t == "uint16") return PlyType::kUInt16;
    if (t == "int" || t == "int32") return PlyType::kInt32;
    if (t == "uint" || t == "uint32") return PlyType::kUInt32;
    if (t == "float" || t == "float32") return PlyType::kFloat32;
    if (t == "double" || t == "float64") return PlyType::kFloat64;
    return std::nullopt;
}

const char* type_name(PlyType t) {
    switch (t) {
        case PlyType::kInt8: return "char";
        case PlyType::kUInt8: return "uchar";
        case PlyType::kInt16: return "short";
        case PlyType::kUInt16: return "ushort";
        case PlyType::kInt32: return "int";
        case PlyType::kUInt32: return "uint";
        case PlyType::kFloat32: return "float";
        case PlyType::kFloat64: return "double";
    }
    return "double";
}

std::size_t type_size(PlyType t) {
    switch (t) {
        case PlyType::kInt8:
        case PlyType::kUInt8: return 1;
        case PlyType::kInt16:
        case PlyType::kUInt16: return 2;
        case PlyType::kInt32:
        case PlyType::kUInt32:
        case PlyType::kFloat32: return 4;
        case PlyType::kFloat64: return 8;
    }
    return 8;
}

template <typename T>
T read_raw(const std::uint8_t* p, bool swap) {
    std::uint8_t b[sizeof(T)];
    std::memcpy(b, p, sizeof(T));
    if (swap) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

double read_binary(const std::uint8_t* p, PlyType t, bool swap) {
    switch (t) {
        case PlyType::kInt8: return read_raw<std::int8_t>(p, swap);
        case PlyType::kUInt8: return read_raw<std::uint8_t>(p, swap);
        case PlyType::kInt16: return read_raw<std::int16_t>(p, swap);
        case PlyType::kUInt16: return read_raw<std::uint16_t>(p, swap);
        case PlyType::kInt32: return read_raw<std::int32_t>(p, swap);
        case PlyType::kUInt32: return read_raw<std::uint32_t>(p, swap);
        case PlyType::kFloat32: return read_raw<float>(p, swap);
        case PlyType::kFloat64: return read_raw<double>(p, swap);
    }
    return 0.0;
}

void write_binary(std::vector<std::uint8_t>& out, double v, PlyType t) {
    switch (t) {
        case PlyType::kInt8: append_le(out, static_cast<std::int8_t>(v)); break;
        case PlyType::kUInt8: append_le(out, static_cast<std::uint8_t>(v)); break;
        case PlyType::kInt16: append_le(out, static_cast<std::int16_t>(v)); break;
        case PlyType::kUInt16: append_le(out, static_cast<std::uint16_t>(v)); break;
        case PlyType::kInt32: append_le(out, static_cast<std::int32_t>(v)); break;
        case PlyType::kUInt32: append_le(out, static_cast<std::uint32_t>(v)); break;
        case PlyType::kFloat32: append_le(out, static_cast<float>(v)); break;
        case PlyType::kFloat64: append_le(out, v); break;
    }
}

struct PropertyDecl {
    std::string name;
    PlyType type = PlyType::kFloat64;
    bool is_list = false;
    PlyType count_type = PlyType::kUInt8;
};

struct ElementDecl {
    std::string name;
    std::size_t count = 0;
    std::vector<PropertyDecl> props;
};

}  // namespace

std::optional<std::size_t> PlyElement::find(std::string_view property) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == property) return i;
    }
    return std::nullopt;
}

const std::vector<double>& PlyElement::column(std::string_view property) const {
    const auto idx = find(property);
    if (!idx) {
        throw ParseError("PLY element '" + name + "' is missing property '" + std::string(property) + "'", 0);
    }
    return columns[*idx];
}

void PlyElement::add(std::string property, PlyType type, std::vector<double> values) {
    if (values.size() != count) {
        throw std::invalid_argument("PLY column length does not match the element count");
    }
    names.push_back(std::move(property));
    types.push_back(type);
    columns.push_back(std::move(values));
}

const PlyElement* PlyData::find(std::string_view element) const {
    for (const auto& e : elements) {
        if (e.name == element) return &e;
    }
    return nullptr;
}

PlyData parse_ply(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    auto next_line = [&]() -> std::pair<std::string, std::size_t> {
        const std::size_t start = pos;
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        if (pos >= bytes.size()) {
            throw ParseError("PLY header is not terminated by end_header", start);
        }
        std::string line(reinterpret_cast<const char*>(bytes.data() + start), pos - start);
        ++pos;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return {line, start};
    };

    if (bytes.size() < 3 || std::string(reinterpret_cast<const char*>(bytes.data()), 3) != "ply") {
        throw ParseError("missing 'ply' magic", 0);
    }
    next_line();
    std::optional<Format> format;
    std::vector<ElementDecl> decls;
    for (;;) {
        const auto [line, at] = next_line();
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key.empty() || key == "comment" || key == "obj_info") continue;
        if (key == "end_header") break;
        if (key == "format") {
            std::string f;
            ss >> f;
            if (f == "ascii") format = Format::kAscii;
            else if (f == "binary_little_endian") format = Format::kLittle;
            else if (f == "binary_big_endian") format = Format::kBig;
            else throw ParseError("unknown PLY format '" + f + "'", at);
        } else if (key == "element") {
            ElementDecl e;
            long long count = -1;
            ss >> e.name >> count;
            if (e.name.empty() || count < 0) throw ParseError("malformed element line", at);
            e.count = static_cast<std::size_t>(count);
            decls.push_back(std::move(e));
        } else if (key == "property") {
            if (decls.empty()) throw ParseError("property before any element", at);
            PropertyDecl p;
            std::string t;
            ss >> t;
            if (t == "list") {
                std::string ct, it;
                ss >> ct >> it >> p.name;
                const auto c = parse_type(ct);
                const auto i = parse_type(it);
                if (!c || !i) throw ParseError("unknown PLY list type", at);
                p.is_list = true;
                p.count_type = *c;
                p.type = *i;
            } else {
                const auto ty = parse_type(t);
                if (!ty) throw ParseError("unknown PLY property type '" + t + "'", at);
                p.type = *ty;
                ss >> p.name;
            }
            if (p.name.empty()) throw ParseError("property without a name", at);
            decls.back().props.push_back(std::move(p));
        } else {
            throw ParseError("unexpected PLY header keyword '" + key + "'", at);
        }
    }
    if (!format) throw ParseError("PLY header has no format line", 0);

    PlyData data;
    if (*format == Format::kAscii) {
        std::string body(reinterpret_cast<const char*>(bytes.data() + pos), bytes.size() - pos);
        std::istringstream ss(body);
        for (const auto& d : decls) {
            PlyElement e;
            e.name = d.name;
            e.count = d.count;
            std::vector<std::vector<double>> cols;
            for (const auto& p : d.props) {
                if (!p.is_list) {
                    e.names.push_back(p.name);
                    e.types.push_back(p.type);
                    cols.emplace_back();
                    cols.back().reserve(d.count);
                }
            }
            for (std::size_t r = 0; r < d.count; ++r) {
                std::size_t col = 0;
                for (const auto& p : d.props) {
                    double v;
                    if (!(ss >> v)) throw ParseError("truncated ASCII PLY body in element '" + d.name + "'", pos);
                    if (p.is_list) {
                        for (long long n = 0; n < static_cast<long long>(v); ++n) {
                            double skip;
                            if (!(ss >> skip)) throw ParseError("truncated ASCII PLY list", pos);
                        }
                    } else {
                        cols[col++].push_back(v);
                    }
                }
            }
            e.columns = std::move(cols);
            data.elements.push_back(std::move(e));
        }
        return data;
    }

    const bool swap = (*format == Format::kBig) != (std::endian::native == std::endian::big);
    for (const auto& d : decls) {
        PlyElement e;
        e.name = d.name;
        e.count = d.count;
        for (const auto& p : d.props) {
            if (!p.is_list) {
                e.names.push_back(p.name);
                e.types.push_back(p.type);
                e.columns.emplace_back();
                e.columns.back().reserve(std::min<std::size_t>(d.count, bytes.size()));
            }
        }
        for (std::size_t r = 0; r < d.count; ++r) {
            std::size_t col = 0;
            for (const auto& p : d.props) {
                if (p.is_list) {
                    const std::size_t cs = type_size(p.count_type);
                    if (pos + cs > bytes.size()) throw ParseError("truncated PLY list count", pos);
                    const auto n = static_cast<std::size_t>(read_binary(bytes.data() + pos, p.count_type, swap));
                    pos += cs;
                    const std::size_t skip = n * type_size(p.type);
                    if (pos + skip > bytes.size()) throw ParseError("truncated PLY list", pos);
                    pos += skip;
                    continue;
                }
                const std::size_t ts = type_size(p.type);
                if (pos + ts > bytes.size()) {
                    throw ParseError("truncated PLY body in element '" + d.name + "'", pos);
                }
                e.columns[col++].push_back(read_binary(bytes.data() + pos, p.type, swap));
                pos += ts;
            }
        }
        data.elements.push_back(std::move(e));
    }
    return data;
}

std::vector<std::uint8_t> encode_ply(const PlyData& data) {
    std::ostringstream header;
    header << "ply\nformat binary_little_endian 1.0\n";
    for (const auto& e : data.elements) {
        header << "element " << e.name << ' ' << e.count << '\n';
        for (std::size_t p = 0; p < e.names.size(); ++p) {
            header << "property " << type_name(e.types[p]) << ' ' << e.names[p] << '\n';
        }
    }
    header << "end_header\n";
    const std::string h = header.str();
    std::vector<std::uint8_t> out(h.begin(), h.end());
    for (const auto& e : data.elements) {
        for (std::size_t r = 0; r < e.count; ++r) {
            for (std::size_t p = 0; p < e.names.size(); ++p) {
                write_binary(out, e.columns[p][r], e.types[p]);
            }
        }
    }
    return out;
}

PlyData read_ply(const std::string& path) { return parse_ply(read_file_bytes(path)); }

void write_ply(const std::string& path, const PlyData& data) { write_file_bytes(path, encode_ply(data)); }

PlyData point_cloud_to_ply(const LabeledPointCloud& cloud) {
    cloud.validate();
    PlyElement e;
    e.name = "vertex";
    e.count = cloud.size();
    for (int a = 0; a < 3; ++a) {
        std::vector<double> col(cloud.size());
        for (std::size_t i = 0; i < cloud.size(); ++i) col[i] = cloud.positions[i][a];
        e.add(std::string(1, "xyz"[a]), PlyType::kFloat64, std::move(col));
    }
    if (cloud.has_labels()) {
        e.add("label", PlyType::kInt32, {cloud.labels.begin(), cloud.labels.end()});
    }
    if (!cloud.timestamps.empty()) {
        e.add("timestamp", PlyType::kFloat64, cloud.timestamps);
    }
    if (!cloud.frame_ids.empty()) {
        e.add("frame", PlyType::kInt32, {cloud.frame_ids.begin(), cloud.frame_ids.end()});
    }
    PlyData data;
    data.elements.push_back(std::move(e));
    return data;
}

LabeledPointCloud point_cloud_from_ply(const PlyData& data, int num_classes) {
    const PlyElement* v = data.find("vertex");
    if (!v) {
        throw ParseError("PLY has no vertex element", 0);
    }
    LabeledPointCloud cloud;
    const auto& x = v->column("x");
    const auto& y = v->column("y");
    const auto& z = v->column("z");
    cloud.positions.resize(v->count);
    for (std::size_t i = 0; i < v->count; ++i) {
        cloud.positions[i] = Vec3(x[i], y[i], z[i]);
    }
    for (const char* name : {"label", "semantic", "class"}) {
        if (const auto idx = v->find(name)) {
            int max_label = -1;
            for (const double l : v->columns[*idx]) {
                cloud.labels.push_back(static_cast<std::int32_t>(std::lround(l)));
                max_label = std::max(max_label, cloud.labels.back());
            }
            cloud.num_classes = std::max(num_classes, max_label + 1);
            break;
        }
    }
    if (const auto idx = v->find("timestamp")) {
        cloud.timestamps = v->columns[*idx];
    }
    if (const auto idx = v->find("frame")) {
        for (const double f : v->columns[*idx]) {
            cloud.frame_ids.push_back(static_cast<std::int32_t>(std::lround(f)));
        }
    }
    cloud.validate();
    return cloud;
}

}  // namespace voxsplat::io

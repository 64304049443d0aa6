#include "trits/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

namespace trits {

namespace {

constexpr std::size_t kMagicLen = sizeof(kCheckpointMagic) - 1;

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFFu);
    os.write(reinterpret_cast<const char*>(buf), 8);
}

bool get_u64(std::istream& is, std::uint64_t& v) {
    unsigned char buf[8];
    if (!is.read(reinterpret_cast<char*>(buf), 8)) return false;
    v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return true;
}

std::uint64_t must_u64(std::istream& is, const char* what) {
    std::uint64_t v = 0;
    if (!get_u64(is, v)) throw FormatError(std::string("checkpoint truncated while reading ") + what);
    return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamList& params) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open checkpoint for writing: " + path.string());
    os.write(kCheckpointMagic, static_cast<std::streamsize>(kMagicLen));
    for (const auto& p : params) {
        put_u64(os, p.name.size());
        os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        const Shape& s = p.var->shape();
        put_u64(os, s.size());
        for (auto e : s) put_u64(os, e);
        for (double v : p.var->value.data()) put_u64(os, std::bit_cast<std::uint64_t>(v));
    }
    if (!os) throw FormatError("failed writing checkpoint " + path.string());
}

std::vector<TensorRecord> read_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open checkpoint: " + path.string());
    char magic[kMagicLen];
    if (!is.read(magic, kMagicLen) || std::memcmp(magic, kCheckpointMagic, kMagicLen) != 0) {
        throw FormatError("not a TRTS1 checkpoint: " + path.string());
    }
    std::vector<TensorRecord> out;
    std::uint64_t name_len = 0;
    while (get_u64(is, name_len)) {
        if (name_len > 4096) throw FormatError("checkpoint record name too long");
        std::string name(name_len, '\0');
        if (!is.read(name.data(), static_cast<std::streamsize>(name_len))) {
            throw FormatError("checkpoint truncated in record name");
        }
        const std::uint64_t rank = must_u64(is, "rank");
        if (rank > 16) throw FormatError("checkpoint record '" + name + "' has implausible rank");
        Shape shape;
        for (std::uint64_t i = 0; i < rank; ++i) shape.push_back(must_u64(is, "extent"));
        std::vector<double> values(shape_numel(shape));
        for (auto& v : values) v = std::bit_cast<double>(must_u64(is, "values"));
        out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
    }
    return out;
}

void load_checkpoint(const std::filesystem::path& path, const ParamList& params) {
    auto records = read_checkpoint(path);
    std::map<std::string, Tensor> by_name;
    for (auto& [name, t] : records) by_name.emplace(name, std::move(t));
    for (const auto& p : params) {
        auto it = by_name.find(p.name);
        if (it == by_name.end()) throw FormatError("checkpoint lacks parameter '" + p.name + "'");
        if (it->second.shape() != p.var->shape()) {
            throw ShapeError("checkpoint parameter '" + p.name + "'", p.var->shape(), it->second.shape());
        }
        p.var->value = std::move(it->second);
        by_name.erase(it);
    }
    if (!by_name.empty()) {
        throw FormatError("checkpoint has unexpected parameter '" + by_name.begin()->first + "'");
    }
}

}  // namespace trits

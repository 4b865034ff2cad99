#include "nn/params.hpp"

#include <cstring>
#include <fstream>

namespace penseg::nn {

namespace {
constexpr char kMagic[8] = {'P', 'S', 'P', 'A', 'R', 'A', 'M', '1'};
}

void ParamStore::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write parameter file: " + path);
    out.write(kMagic, 8);
    uint64_t count = entries_.size();
    out.write(reinterpret_cast<const char*>(&count), 8);
    for (const auto& [name, e] : entries_) {
        uint32_t nlen = static_cast<uint32_t>(name.size());
        out.write(reinterpret_cast<const char*>(&nlen), 4);
        out.write(name.data(), nlen);
        uint8_t trainable = e.trainable ? 1 : 0;
        out.write(reinterpret_cast<const char*>(&trainable), 1);
        uint32_t ndim = static_cast<uint32_t>(e.value.shape.size());
        out.write(reinterpret_cast<const char*>(&ndim), 4);
        for (int d : e.value.shape) {
            uint32_t dd = static_cast<uint32_t>(d);
            out.write(reinterpret_cast<const char*>(&dd), 4);
        }
        out.write(reinterpret_cast<const char*>(e.value.data.data()),
                  static_cast<std::streamsize>(e.value.size() * sizeof(double)));
    }
    if (!out) throw FormatError("short write: " + path);
}

ParamStore ParamStore::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open parameter file: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw FormatError("bad parameter file magic: " + path);
    uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), 8);
    ParamStore store;
    for (uint64_t i = 0; i < count; ++i) {
        uint32_t nlen = 0;
        in.read(reinterpret_cast<char*>(&nlen), 4);
        std::string name(nlen, '\0');
        in.read(name.data(), nlen);
        uint8_t trainable = 1;
        in.read(reinterpret_cast<char*>(&trainable), 1);
        uint32_t ndim = 0;
        in.read(reinterpret_cast<char*>(&ndim), 4);
        std::vector<int> shape(ndim);
        for (uint32_t d = 0; d < ndim; ++d) {
            uint32_t dd = 0;
            in.read(reinterpret_cast<char*>(&dd), 4);
            shape[d] = static_cast<int>(dd);
        }
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.size() * sizeof(double)));
        if (!in) throw FormatError("truncated parameter file: " + path);
        store.add(name, std::move(t), trainable != 0);
    }
    return store;
}

}  // namespace penseg::nn

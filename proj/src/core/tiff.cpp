#include "core/tiff.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace penseg {
namespace {

// Minimal classic-TIFF (little endian) reader/writer covering the subset
// this project emits and consumes: grayscale, uncompressed, strip-based,
// uint8/uint16/float32 samples, multi-page.

constexpr uint16_t TAG_IMAGE_WIDTH = 256;
constexpr uint16_t TAG_IMAGE_LENGTH = 257;
constexpr uint16_t TAG_BITS_PER_SAMPLE = 258;
constexpr uint16_t TAG_COMPRESSION = 259;
constexpr uint16_t TAG_PHOTOMETRIC = 262;
constexpr uint16_t TAG_IMAGE_DESCRIPTION = 270;
constexpr uint16_t TAG_STRIP_OFFSETS = 273;
constexpr uint16_t TAG_SAMPLES_PER_PIXEL = 277;
constexpr uint16_t TAG_ROWS_PER_STRIP = 278;
constexpr uint16_t TAG_STRIP_BYTE_COUNTS = 279;
constexpr uint16_t TAG_SAMPLE_FORMAT = 339;

constexpr uint16_t TYPE_SHORT = 3;
constexpr uint16_t TYPE_LONG = 4;

struct Reader {
    std::vector<uint8_t> bytes;
    bool big_endian = false;

    uint16_t u16(size_t off) const {
        check(off + 2);
        if (big_endian) return static_cast<uint16_t>(bytes[off] << 8 | bytes[off + 1]);
        return static_cast<uint16_t>(bytes[off] | bytes[off + 1] << 8);
    }
    uint32_t u32(size_t off) const {
        check(off + 4);
        if (big_endian)
            return (uint32_t(bytes[off]) << 24) | (uint32_t(bytes[off + 1]) << 16) |
                   (uint32_t(bytes[off + 2]) << 8) | uint32_t(bytes[off + 3]);
        return uint32_t(bytes[off]) | (uint32_t(bytes[off + 1]) << 8) |
               (uint32_t(bytes[off + 2]) << 16) | (uint32_t(bytes[off + 3]) << 24);
    }
    void check(size_t end) const {
        if (end > bytes.size()) throw FormatError("TIFF: truncated file");
    }
};

struct Entry {
    uint16_t type = 0;
    uint32_t count = 0;
    uint32_t value_off = 0;  // offset of the value field itself
};

// Reads the i-th integral value of an entry (SHORT or LONG).
uint32_t entry_value(const Reader& r, const Entry& e, uint32_t i) {
    size_t unit = e.type == TYPE_SHORT ? 2 : 4;
    size_t base = e.value_off;
    if (e.count * unit > 4) base = r.u32(e.value_off);
    if (e.type == TYPE_SHORT) return r.u16(base + i * 2);
    if (e.type == TYPE_LONG) return r.u32(base + i * 4);
    throw FormatError("TIFF: unsupported tag value type " + std::to_string(e.type));
}

std::string entry_ascii(const Reader& r, const Entry& e) {
    size_t base = e.value_off;
    if (e.count > 4) base = r.u32(e.value_off);
    r.check(base + e.count);
    std::string s(reinterpret_cast<const char*>(r.bytes.data() + base), e.count);
    while (!s.empty() && s.back() == '\0') s.pop_back();
    return s;
}

// Pulls a numeric attribute like PhysicalSizeZ="10.0" out of OME-XML.
bool xml_attr(const std::string& xml, const std::string& name, double* out) {
    size_t pos = xml.find(name + "=\"");
    if (pos == std::string::npos) return false;
    pos += name.size() + 2;
    size_t end = xml.find('"', pos);
    if (end == std::string::npos) return false;
    try {
        *out = std::stod(xml.substr(pos, end - pos));
    } catch (...) {
        return false;
    }
    return true;
}

struct PageData {
    uint32_t width = 0, height = 0;
    std::vector<double> pixels;
    std::string description;
};

PageData read_page(const Reader& r, size_t ifd_off, int page_index) {
    uint16_t n = r.u16(ifd_off);
    std::map<uint16_t, Entry> entries;
    for (uint16_t i = 0; i < n; ++i) {
        size_t e = ifd_off + 2 + static_cast<size_t>(i) * 12;
        Entry ent;
        uint16_t tag = r.u16(e);
        ent.type = r.u16(e + 2);
        ent.count = r.u32(e + 4);
        ent.value_off = static_cast<uint32_t>(e + 8);
        entries[tag] = ent;
    }
    auto get = [&](uint16_t tag, uint32_t fallback, bool required = false) -> uint32_t {
        auto it = entries.find(tag);
        if (it == entries.end()) {
            if (required)
                throw FormatError("TIFF: page " + std::to_string(page_index) +
                                  " missing tag " + std::to_string(tag));
            return fallback;
        }
        return entry_value(r, it->second, 0);
    };

    PageData page;
    page.width = get(TAG_IMAGE_WIDTH, 0, true);
    page.height = get(TAG_IMAGE_LENGTH, 0, true);
    uint32_t spp = get(TAG_SAMPLES_PER_PIXEL, 1);
    if (spp != 1)
        throw FormatError("TIFF: page " + std::to_string(page_index) +
                          " has " + std::to_string(spp) + " channels; expected single-channel");
    uint32_t compression = get(TAG_COMPRESSION, 1);
    if (compression != 1)
        throw FormatError("TIFF: page " + std::to_string(page_index) +
                          " uses unsupported compression " + std::to_string(compression));
    uint32_t bits = get(TAG_BITS_PER_SAMPLE, 1);
    uint32_t sample_format = get(TAG_SAMPLE_FORMAT, 1);
    if (auto it = entries.find(TAG_IMAGE_DESCRIPTION); it != entries.end())
        page.description = entry_ascii(r, it->second);

    size_t bytes_per_sample;
    if (bits == 8 && sample_format == 1) bytes_per_sample = 1;
    else if (bits == 16 && sample_format == 1) bytes_per_sample = 2;
    else if (bits == 32 && sample_format == 3) bytes_per_sample = 4;
    else
        throw FormatError("TIFF: page " + std::to_string(page_index) + " has unsupported sample layout (" +
                          std::to_string(bits) + " bits, format " + std::to_string(sample_format) + ")");

    auto off_it = entries.find(TAG_STRIP_OFFSETS);
    auto cnt_it = entries.find(TAG_STRIP_BYTE_COUNTS);
    if (off_it == entries.end() || cnt_it == entries.end())
        throw FormatError("TIFF: page " + std::to_string(page_index) + " missing strip layout");
    uint32_t n_strips = off_it->second.count;

    std::vector<uint8_t> raw;
    raw.reserve(static_cast<size_t>(page.width) * page.height * bytes_per_sample);
    for (uint32_t s = 0; s < n_strips; ++s) {
        uint32_t off = entry_value(r, off_it->second, s);
        uint32_t cnt = entry_value(r, cnt_it->second, s);
        r.check(static_cast<size_t>(off) + cnt);
        raw.insert(raw.end(), r.bytes.begin() + off, r.bytes.begin() + off + cnt);
    }
    size_t expected = static_cast<size_t>(page.width) * page.height * bytes_per_sample;
    if (raw.size() < expected)
        throw FormatError("TIFF: page " + std::to_string(page_index) + " pixel data truncated");

    page.pixels.resize(static_cast<size_t>(page.width) * page.height);
    for (size_t i = 0; i < page.pixels.size(); ++i) {
        const uint8_t* p = raw.data() + i * bytes_per_sample;
        if (bytes_per_sample == 1) {
            page.pixels[i] = *p;
        } else if (bytes_per_sample == 2) {
            uint16_t v = r.big_endian ? uint16_t(p[0] << 8 | p[1]) : uint16_t(p[0] | p[1] << 8);
            page.pixels[i] = v;
        } else {
            uint32_t v = r.big_endian
                             ? (uint32_t(p[0]) << 24 | uint32_t(p[1]) << 16 | uint32_t(p[2]) << 8 | p[3])
                             : (uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
                                uint32_t(p[3]) << 24);
            float f;
            std::memcpy(&f, &v, 4);
            page.pixels[i] = f;
        }
    }
    return page;
}

void put16(std::vector<uint8_t>& b, uint16_t v) {
    b.push_back(v & 0xff);
    b.push_back(v >> 8);
}
void put32(std::vector<uint8_t>& b, uint32_t v) {
    b.push_back(v & 0xff);
    b.push_back((v >> 8) & 0xff);
    b.push_back((v >> 16) & 0xff);
    b.push_back((v >> 24) & 0xff);
}

}  // namespace

ImageStack load_stack(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open stack file: " + path);
    Reader r;
    r.bytes.assign(std::istreambuf_iterator<char>(in), {});
    if (r.bytes.size() < 8) throw FormatError("TIFF: file too small: " + path);
    if (r.bytes[0] == 'I' && r.bytes[1] == 'I') r.big_endian = false;
    else if (r.bytes[0] == 'M' && r.bytes[1] == 'M') r.big_endian = true;
    else throw FormatError("TIFF: bad byte-order mark: " + path);
    if (r.u16(2) != 42) throw FormatError("TIFF: bad magic: " + path);

    std::vector<PageData> pages;
    size_t ifd = r.u32(4);
    while (ifd != 0) {
        pages.push_back(read_page(r, ifd, static_cast<int>(pages.size())));
        uint16_t n = r.u16(ifd);
        ifd = r.u32(ifd + 2 + static_cast<size_t>(n) * 12);
        if (pages.size() > 100000) throw FormatError("TIFF: IFD chain too long (cycle?)");
    }
    if (pages.empty()) throw FormatError("TIFF: no pages: " + path);
    for (size_t i = 1; i < pages.size(); ++i) {
        if (pages[i].width != pages[0].width || pages[i].height != pages[0].height)
            throw FormatError("TIFF: page " + std::to_string(i) + " size " +
                              std::to_string(pages[i].width) + "x" + std::to_string(pages[i].height) +
                              " differs from page 0");
    }

    VoxelGeometry geom;
    const std::string& desc = pages[0].description;
    if (!desc.empty()) {
        double v;
        if (xml_attr(desc, "PhysicalSizeX", &v) && v > 0) geom.dx_um = v;
        if (xml_attr(desc, "PhysicalSizeY", &v) && v > 0) geom.dy_um = v;
        if (xml_attr(desc, "PhysicalSizeZ", &v) && v > 0) geom.dz_um = v;
    }

    ImageStack stack(static_cast<int>(pages.size()), static_cast<int>(pages[0].height),
                     static_cast<int>(pages[0].width), geom);
    for (size_t z = 0; z < pages.size(); ++z) {
        for (size_t i = 0; i < pages[z].pixels.size(); ++i) {
            double v = pages[z].pixels[i];
            if (!std::isfinite(v) || v < 0)
                throw FormatError("TIFF: page " + std::to_string(z) + " has non-finite or negative voxel");
            stack.data()[z * pages[z].pixels.size() + i] = v;
        }
    }
    return stack;
}

void save_stack(const ImageStack& stack, const std::string& path) {
    const int Z = stack.depth(), H = stack.height(), W = stack.width();
    std::ostringstream ome;
    ome << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>"
        << "<OME><Image ID=\"Image:0\"><Pixels ID=\"Pixels:0\" DimensionOrder=\"XYZCT\""
        << " Type=\"float\" SizeX=\"" << W << "\" SizeY=\"" << H << "\" SizeZ=\"" << Z
        << "\" SizeC=\"1\" SizeT=\"1\""
        << " PhysicalSizeX=\"" << stack.geometry().dx_um << "\""
        << " PhysicalSizeY=\"" << stack.geometry().dy_um << "\""
        << " PhysicalSizeZ=\"" << stack.geometry().dz_um << "\"/></Image></OME>";
    std::string desc = ome.str();
    if (desc.size() % 2 == 0) desc.push_back('\0');  // keep offsets word-aligned

    std::vector<uint8_t> out;
    out.reserve(16 + static_cast<size_t>(Z) * H * W * 4);
    out.push_back('I');
    out.push_back('I');
    put16(out, 42);
    put32(out, 0);  // first IFD offset, patched below

    size_t desc_off = out.size();
    out.insert(out.end(), desc.begin(), desc.end());
    if (out.size() % 2) out.push_back(0);

    std::vector<uint32_t> strip_offsets(Z);
    const uint32_t strip_bytes = static_cast<uint32_t>(H) * W * 4;
    for (int z = 0; z < Z; ++z) {
        strip_offsets[z] = static_cast<uint32_t>(out.size());
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                float f = static_cast<float>(stack.at(z, y, x));
                uint32_t v;
                std::memcpy(&v, &f, 4);
                put32(out, v);
            }
    }

    size_t prev_link = 4;  // file offset of the pointer to the next IFD
    for (int z = 0; z < Z; ++z) {
        size_t ifd_off = out.size();
        uint32_t v = static_cast<uint32_t>(ifd_off);
        out[prev_link] = v & 0xff;
        out[prev_link + 1] = (v >> 8) & 0xff;
        out[prev_link + 2] = (v >> 16) & 0xff;
        out[prev_link + 3] = (v >> 24) & 0xff;

        struct Tag {
            uint16_t tag, type;
            uint32_t count, value;
        };
        std::vector<Tag> tags = {
            {TAG_IMAGE_WIDTH, TYPE_LONG, 1, static_cast<uint32_t>(W)},
            {TAG_IMAGE_LENGTH, TYPE_LONG, 1, static_cast<uint32_t>(H)},
            {TAG_BITS_PER_SAMPLE, TYPE_SHORT, 1, 32},
            {TAG_COMPRESSION, TYPE_SHORT, 1, 1},
            {TAG_PHOTOMETRIC, TYPE_SHORT, 1, 1},  // black-is-zero
            {TAG_STRIP_OFFSETS, TYPE_LONG, 1, strip_offsets[z]},
            {TAG_SAMPLES_PER_PIXEL, TYPE_SHORT, 1, 1},
            {TAG_ROWS_PER_STRIP, TYPE_LONG, 1, static_cast<uint32_t>(H)},
            {TAG_STRIP_BYTE_COUNTS, TYPE_LONG, 1, strip_bytes},
            {TAG_SAMPLE_FORMAT, TYPE_SHORT, 1, 3},  // IEEE float
        };
        if (z == 0)
            tags.insert(tags.begin() + 5,
                        Tag{TAG_IMAGE_DESCRIPTION, 2 /*ASCII*/, static_cast<uint32_t>(desc.size()),
                            static_cast<uint32_t>(desc_off)});
        // tags must be sorted by tag id; IMAGE_DESCRIPTION (270) sits before 273
        put16(out, static_cast<uint16_t>(tags.size()));
        for (const Tag& t : tags) {
            put16(out, t.tag);
            put16(out, t.type);
            put32(out, t.count);
            if (t.type == TYPE_SHORT && t.count == 1) {
                put16(out, static_cast<uint16_t>(t.value));
                put16(out, 0);
            } else {
                put32(out, t.value);
            }
        }
        prev_link = out.size();
        put32(out, 0);
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw FormatError("cannot write stack file: " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw FormatError("short write: " + path);
}

}  // namespace penseg

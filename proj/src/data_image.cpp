#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "rednet/data.hpp"
#include "rednet/errors.hpp"

namespace rednet {

void ImageGray::clip01() {
    for (double& v : pix) v = std::clamp(v, 0.0, 1.0);
}

ImageGray crop(const ImageGray& img, int y, int x, int h, int w) {
    if (y < 0 || x < 0 || h < 1 || w < 1 || y + h > img.h || x + w > img.w) {
        throw ShapeError("crop " + std::to_string(h) + "x" + std::to_string(w) + "+" +
                         std::to_string(y) + "+" + std::to_string(x) +
                         " outside image " + std::to_string(img.h) + "x" +
                         std::to_string(img.w));
    }
    ImageGray out(h, w);
    for (int r = 0; r < h; ++r) {
        std::copy_n(&img.pix[static_cast<std::size_t>(y + r) * img.w + x], w,
                    &out.pix[static_cast<std::size_t>(r) * w]);
    }
    return out;
}

double luminance(double r, double g, double b) {
    return 0.299 * r + 0.587 * g + 0.114 * b;
}

namespace {

std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// ---- PGM (binary P5) ----

// Skips PGM whitespace and '#' comments, then parses one decimal integer.
int pgm_next_int(const std::string& buf, std::size_t& pos, const std::filesystem::path& path) {
    for (;;) {
        while (pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
        if (pos < buf.size() && buf[pos] == '#') {
            while (pos < buf.size() && buf[pos] != '\n') ++pos;
            continue;
        }
        break;
    }
    if (pos >= buf.size() || !std::isdigit(static_cast<unsigned char>(buf[pos]))) {
        throw IoError("malformed PGM header in '" + path.string() + "'");
    }
    long value = 0;
    while (pos < buf.size() && std::isdigit(static_cast<unsigned char>(buf[pos]))) {
        value = value * 10 + (buf[pos] - '0');
        if (value > 1'000'000'000L) throw IoError("malformed PGM header in '" + path.string() + "'");
        ++pos;
    }
    return static_cast<int>(value);
}

ImageGray parse_pgm(const std::string& buf, const std::filesystem::path& path) {
    if (buf.size() < 2 || buf[0] != 'P' || buf[1] != '5') {
        throw IoError("'" + path.string() + "' is not a binary PGM (P5)");
    }
    std::size_t pos = 2;
    const int w = pgm_next_int(buf, pos, path);
    const int h = pgm_next_int(buf, pos, path);
    const int maxval = pgm_next_int(buf, pos, path);
    if (w < 1 || h < 1) throw IoError("PGM '" + path.string() + "' has empty dimensions");
    if (maxval < 1 || maxval > 255) {
        throw IoError("PGM '" + path.string() + "' maxval " + std::to_string(maxval) +
                      " unsupported (only 8-bit)");
    }
    // Exactly one whitespace byte separates the header from the raster.
    if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos]))) {
        throw IoError("malformed PGM header in '" + path.string() + "'");
    }
    ++pos;
    const std::size_t need = static_cast<std::size_t>(w) * h;
    if (buf.size() - pos < need) throw IoError("truncated PGM '" + path.string() + "'");

    ImageGray img(h, w);
    for (std::size_t i = 0; i < need; ++i) {
        img.pix[i] = static_cast<unsigned char>(buf[pos + i]) / 255.0;
    }
    return img;
}

// ---- PNG (8-bit grayscale / RGB, no interlace) ----

std::uint32_t get_u32be(const unsigned char* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void put_u32be(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

const unsigned char kPngSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

std::vector<unsigned char> zlib_inflate(const unsigned char* data, std::size_t len,
                                        std::size_t expected,
                                        const std::filesystem::path& path) {
    std::vector<unsigned char> out(expected);
    z_stream zs;
    std::memset(&zs, 0, sizeof(zs));
    if (inflateInit(&zs) != Z_OK) throw IoError("zlib init failed");
    zs.next_in = const_cast<unsigned char*>(data);
    zs.avail_in = static_cast<uInt>(len);
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    const std::size_t produced = out.size() - zs.avail_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != expected) {
        throw IoError("PNG '" + path.string() + "' has a corrupt or truncated pixel stream");
    }
    return out;
}

ImageGray parse_png(const std::string& buf, const std::filesystem::path& path) {
    if (buf.size() < 8 || std::memcmp(buf.data(), kPngSignature, 8) != 0) {
        throw IoError("'" + path.string() + "' is not a PNG");
    }
    std::size_t pos = 8;
    int w = 0, h = 0, channels = 0;
    bool saw_ihdr = false, saw_iend = false;
    std::vector<unsigned char> idat;

    while (pos + 8 <= buf.size()) {
        const auto* p = reinterpret_cast<const unsigned char*>(buf.data() + pos);
        const std::uint32_t len = get_u32be(p);
        if (pos + 12 + len > buf.size()) throw IoError("truncated PNG '" + path.string() + "'");
        const char* type = buf.data() + pos + 4;
        const unsigned char* data = p + 8;
        const std::uint32_t stored_crc = get_u32be(p + 8 + len);
        const std::uint32_t crc =
            crc32(crc32(0L, reinterpret_cast<const Bytef*>(type), 4), data, len);
        if (crc != stored_crc) throw IoError("PNG '" + path.string() + "' chunk CRC mismatch");

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw IoError("malformed PNG IHDR in '" + path.string() + "'");
            w = static_cast<int>(get_u32be(data));
            h = static_cast<int>(get_u32be(data + 4));
            const int bitdepth = data[8], colortype = data[9];
            const int compression = data[10], filter = data[11], interlace = data[12];
            if (bitdepth != 8 || (colortype != 0 && colortype != 2)) {
                throw IoError("PNG '" + path.string() +
                              "' unsupported (need 8-bit grayscale or RGB)");
            }
            if (compression != 0 || filter != 0 || interlace != 0) {
                throw IoError("PNG '" + path.string() + "' unsupported (interlaced or nonstandard)");
            }
            channels = colortype == 0 ? 1 : 3;
            saw_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
            break;
        }
        // Ancillary chunks are skipped.
        pos += 12 + len;
    }
    if (!saw_ihdr || !saw_iend || w < 1 || h < 1) {
        throw IoError("malformed PNG '" + path.string() + "'");
    }

    const std::size_t row_bytes = static_cast<std::size_t>(w) * channels;
    std::vector<unsigned char> raw =
        zlib_inflate(idat.data(), idat.size(), (row_bytes + 1) * h, path);

    // Undo per-row filters in place (raw becomes plain scanlines).
    std::vector<unsigned char> pixels(row_bytes * h);
    for (int y = 0; y < h; ++y) {
        const unsigned char filter = raw[(row_bytes + 1) * y];
        const unsigned char* src = raw.data() + (row_bytes + 1) * y + 1;
        unsigned char* dst = pixels.data() + row_bytes * y;
        const unsigned char* above = y > 0 ? pixels.data() + row_bytes * (y - 1) : nullptr;
        for (std::size_t i = 0; i < row_bytes; ++i) {
            const int left = i >= static_cast<std::size_t>(channels) ? dst[i - channels] : 0;
            const int up = above ? above[i] : 0;
            const int ul = (above && i >= static_cast<std::size_t>(channels))
                               ? above[i - channels] : 0;
            int v = src[i];
            switch (filter) {
                case 0: break;
                case 1: v += left; break;
                case 2: v += up; break;
                case 3: v += (left + up) / 2; break;
                case 4: v += paeth(left, up, ul); break;
                default:
                    throw IoError("PNG '" + path.string() + "' has an invalid row filter");
            }
            dst[i] = static_cast<unsigned char>(v & 0xff);
        }
    }

    ImageGray img(h, w);
    for (int y = 0; y < h; ++y) {
        const unsigned char* row = pixels.data() + row_bytes * y;
        for (int x = 0; x < w; ++x) {
            if (channels == 1) {
                img.at(y, x) = row[x] / 255.0;
            } else {
                img.at(y, x) = std::clamp(luminance(row[3 * x] / 255.0, row[3 * x + 1] / 255.0,
                                                    row[3 * x + 2] / 255.0),
                                          0.0, 1.0);
            }
        }
    }
    return img;
}

void append_png_chunk(std::string& out, const char type[4], const std::string& data) {
    put_u32be(out, static_cast<std::uint32_t>(data.size()));
    out.append(type, 4);
    out += data;
    std::uint32_t crc = crc32(0L, reinterpret_cast<const Bytef*>(type), 4);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data()),
                static_cast<uInt>(data.size()));
    put_u32be(out, crc);
}

std::vector<unsigned char> quantize_bytes(const ImageGray& img) {
    std::vector<unsigned char> bytes(img.pix.size());
    for (std::size_t i = 0; i < img.pix.size(); ++i) {
        const double v = std::clamp(img.pix[i], 0.0, 1.0);
        bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    return bytes;
}

}  // namespace

ImageGray load_pgm(const std::filesystem::path& path) {
    return parse_pgm(read_file_bytes(path), path);
}

void save_pgm(const ImageGray& img, const std::filesystem::path& path) {
    if (img.h < 1 || img.w < 1) throw IoError("cannot save an empty image");
    std::string out = "P5\n" + std::to_string(img.w) + " " + std::to_string(img.h) + "\n255\n";
    const std::vector<unsigned char> bytes = quantize_bytes(img);
    out.append(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    write_file_bytes(path, out);
}

ImageGray load_png(const std::filesystem::path& path) {
    return parse_png(read_file_bytes(path), path);
}

void save_png(const ImageGray& img, const std::filesystem::path& path) {
    if (img.h < 1 || img.w < 1) throw IoError("cannot save an empty image");
    const std::vector<unsigned char> bytes = quantize_bytes(img);
    const std::size_t row_bytes = static_cast<std::size_t>(img.w);
    std::vector<unsigned char> raw((row_bytes + 1) * img.h);
    for (int y = 0; y < img.h; ++y) {
        raw[(row_bytes + 1) * y] = 0;  // filter: none
        std::copy_n(&bytes[row_bytes * y], row_bytes, &raw[(row_bytes + 1) * y + 1]);
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> packed(bound);
    if (compress2(packed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()),
                  Z_DEFAULT_COMPRESSION) != Z_OK) {
        throw IoError("zlib compression failed");
    }

    std::string out(reinterpret_cast<const char*>(kPngSignature), 8);
    std::string ihdr;
    put_u32be(ihdr, static_cast<std::uint32_t>(img.w));
    put_u32be(ihdr, static_cast<std::uint32_t>(img.h));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(0);  // grayscale
    ihdr.push_back(0);  // deflate
    ihdr.push_back(0);  // adaptive filtering
    ihdr.push_back(0);  // no interlace
    append_png_chunk(out, "IHDR", ihdr);
    append_png_chunk(out, "IDAT",
                     std::string(reinterpret_cast<const char*>(packed.data()), bound));
    append_png_chunk(out, "IEND", "");
    write_file_bytes(path, out);
}

ImageGray load_image(const std::filesystem::path& path) {
    const std::string buf = read_file_bytes(path);
    if (buf.size() >= 2 && buf[0] == 'P' && buf[1] == '5') return parse_pgm(buf, path);
    if (buf.size() >= 8 && std::memcmp(buf.data(), kPngSignature, 8) == 0) {
        return parse_png(buf, path);
    }
    throw IoError("unrecognized image format in '" + path.string() +
                  "' (expected binary PGM or PNG)");
}

void save_image(const ImageGray& img, const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (ext == ".pgm") {
        save_pgm(img, path);
    } else if (ext == ".png") {
        save_png(img, path);
    } else {
        throw IoError("unsupported image extension '" + ext + "' (use .pgm or .png)");
    }
}

std::vector<std::filesystem::path> list_image_files(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        throw DataError("image directory '" + dir.string() + "' does not exist");
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == ".pgm" || ext == ".png") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
    return files;
}

}  // namespace rednet

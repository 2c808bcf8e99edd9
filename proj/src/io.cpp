#include "csplat/io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace csplat {

namespace {

std::string fullDouble(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void writeU32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t readU32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

}  // namespace

void writeFimg(const std::filesystem::path& path, const Imaged& img) {
    if (img.empty()) throw IoError("writeFimg: empty image");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("writeFimg: cannot open " + path.string());
    writeU32(os, kFimgMagic);
    writeU32(os, std::uint32_t(img.width));
    writeU32(os, std::uint32_t(img.height));
    writeU32(os, std::uint32_t(Imaged::kChannels));
    std::vector<float> row(size_t(img.width) * Imaged::kChannels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < Imaged::kChannels; ++c)
                row[size_t(x) * Imaged::kChannels + size_t(c)] = float(img.ch[size_t(c)](y, x));
        os.write(reinterpret_cast<const char*>(row.data()),
                 std::streamsize(row.size() * sizeof(float)));
    }
    if (!os) throw IoError("writeFimg: write failed for " + path.string());
}

Imaged readFimg(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("readFimg: cannot open " + path.string());
    const std::uint32_t magic = readU32(is);
    const std::uint32_t w = readU32(is);
    const std::uint32_t h = readU32(is);
    const std::uint32_t c = readU32(is);
    if (!is || magic != kFimgMagic) throw IoError("readFimg: bad magic in " + path.string());
    if (c != Imaged::kChannels || w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20))
        throw IoError("readFimg: bad header in " + path.string());
    Imaged img{int(w), int(h)};
    std::vector<float> row(size_t(w) * c);
    for (std::uint32_t y = 0; y < h; ++y) {
        is.read(reinterpret_cast<char*>(row.data()),
                std::streamsize(row.size() * sizeof(float)));
        if (!is) throw IoError("readFimg: truncated data in " + path.string());
        for (std::uint32_t x = 0; x < w; ++x)
            for (std::uint32_t cc = 0; cc < c; ++cc)
                img.ch[size_t(cc)](int(y), int(x)) = double(row[size_t(x) * c + cc]);
    }
    return img;
}

void writePng8(const std::filesystem::path& path, const Imaged& img) {
    if (img.empty()) throw IoError("writePng8: empty image");
    std::FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp) throw IoError("writePng8: cannot open " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        throw IoError("writePng8: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw IoError("writePng8: libpng error for " + path.string());
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<unsigned char> row(size_t(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                double v = img.ch[size_t(c)](y, x);
                v = v < 0 ? 0 : (v > 1 ? 1 : v);
                row[size_t(x) * 3 + size_t(c)] =
                    static_cast<unsigned char>(std::lround(v * 255.0));
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

void writePoses(const std::filesystem::path& path, const std::vector<Camerad>& cameras,
                int width, int height) {
    if (cameras.empty()) throw IoError("writePoses: no cameras");
    for (const auto& c : cameras)
        if (c.fx != cameras.front().fx || c.fy != cameras.front().fy ||
            c.cx != cameras.front().cx || c.cy != cameras.front().cy)
            throw IoError("writePoses: the pose file carries one shared intrinsics block");
    std::ofstream os(path);
    if (!os) throw IoError("writePoses: cannot open " + path.string());
    const auto& c0 = cameras.front();
    os << fullDouble(c0.fx) << ' ' << fullDouble(c0.fy) << ' ' << fullDouble(c0.cx) << ' '
       << fullDouble(c0.cy) << ' ' << width << ' ' << height << '\n';
    for (const auto& c : cameras) {
        os << c.frame_id << ' ' << fullDouble(c.rotation.w()) << ' '
           << fullDouble(c.rotation.x()) << ' ' << fullDouble(c.rotation.y()) << ' '
           << fullDouble(c.rotation.z()) << ' ' << fullDouble(c.translation.x()) << ' '
           << fullDouble(c.translation.y()) << ' ' << fullDouble(c.translation.z()) << '\n';
    }
    if (!os) throw IoError("writePoses: write failed for " + path.string());
}

PoseFile readPoses(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("readPoses: cannot open " + path.string());
    PoseFile out;
    double fx, fy, cx, cy;
    if (!(is >> fx >> fy >> cx >> cy >> out.width >> out.height))
        throw IoError("readPoses: bad header in " + path.string());
    int frame;
    double qw, qx, qy, qz, tx, ty, tz;
    while (is >> frame >> qw >> qx >> qy >> qz >> tx >> ty >> tz) {
        out.cameras.emplace_back(frame, fx, fy, cx, cy,
                                 Eigen::Quaterniond(qw, qx, qy, qz),
                                 Eigen::Vector3d(tx, ty, tz));
    }
    if (out.cameras.empty()) throw IoError("readPoses: no poses in " + path.string());
    return out;
}

void writeCloud(const std::filesystem::path& path, const GaussianCloudd& cloud) {
    std::ofstream os(path);
    if (!os) throw IoError("writeCloud: cannot open " + path.string());
    os << "csplat-cloud 1 " << cloud.size() << '\n';
    for (const auto& g : cloud.gaussians) {
        os << fullDouble(g.position.x()) << ' ' << fullDouble(g.position.y()) << ' '
           << fullDouble(g.position.z()) << ' ' << fullDouble(g.scale.x()) << ' '
           << fullDouble(g.scale.y()) << ' ' << fullDouble(g.scale.z()) << ' '
           << fullDouble(g.rotation.w()) << ' ' << fullDouble(g.rotation.x()) << ' '
           << fullDouble(g.rotation.y()) << ' ' << fullDouble(g.rotation.z()) << ' '
           << fullDouble(g.opacity) << ' ' << fullDouble(g.color.x()) << ' '
           << fullDouble(g.color.y()) << ' ' << fullDouble(g.color.z()) << '\n';
    }
    if (!os) throw IoError("writeCloud: write failed for " + path.string());
}

GaussianCloudd readCloud(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("readCloud: cannot open " + path.string());
    std::string tag;
    int version = 0;
    std::size_t count = 0;
    if (!(is >> tag >> version >> count) || tag != "csplat-cloud" || version != 1)
        throw IoError("readCloud: bad header in " + path.string());
    GaussianCloudd cloud;
    cloud.gaussians.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        double px, py, pz, sx, sy, sz, qw, qx, qy, qz, op, r, g, b;
        if (!(is >> px >> py >> pz >> sx >> sy >> sz >> qw >> qx >> qy >> qz >> op >> r >>
              g >> b))
            throw IoError("readCloud: truncated at entry " + std::to_string(i));
        cloud.gaussians.emplace_back(Eigen::Vector3d(px, py, pz), Eigen::Vector3d(sx, sy, sz),
                                     Eigen::Quaterniond(qw, qx, qy, qz), op,
                                     Eigen::Vector3d(r, g, b));
    }
    return cloud;
}

}  // namespace csplat

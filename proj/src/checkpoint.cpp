#include "dbncls/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace dbncls {

namespace {

constexpr char kTag[8] = {'D', 'B', 'N', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ofstream& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

struct Reader {
    std::vector<unsigned char> buf;
    std::size_t pos = 0;
    std::string path;

    void need(std::size_t n) const {
        if (pos + n > buf.size())
            throw_error(ErrorCategory::format, "ckpt_truncated",
                        "'" + path + "' ends before the declared payload");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[pos + i]) << (8 * i);
        pos += 8;
        double d;
        std::memcpy(&d, &bits, 8);
        return d;
    }
};

} // namespace

void save_checkpoint(const DbnParams& dbn, const ClassifierParams& cls, const std::string& path) {
    dbn.check_consistent();
    cls.check_consistent();
    if (cls.feature_size() != dbn.top_size())
        throw_error(ErrorCategory::dimension, "ckpt_bad_dims",
                    "classifier width does not match the stack top");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw_error(ErrorCategory::io, "file_open", "cannot write '" + path + "'");
    out.write(kTag, 8);
    put_u32(out, static_cast<std::uint32_t>(dbn.depth()));
    for (const RbmParams& layer : dbn.layers) {
        put_u32(out, static_cast<std::uint32_t>(layer.hidden()));
        put_u32(out, static_cast<std::uint32_t>(layer.visible()));
    }
    put_u32(out, static_cast<std::uint32_t>(cls.num_classes()));
    for (const RbmParams& layer : dbn.layers) {
        for (double v : layer.W.data()) put_f64(out, v);
        for (double v : layer.b) put_f64(out, v);
        for (double v : layer.c) put_f64(out, v);
    }
    for (double v : cls.U.data()) put_f64(out, v);
    for (double v : cls.d) put_f64(out, v);
    if (!out)
        throw_error(ErrorCategory::io, "file_write", "failed writing '" + path + "'");
}

void save_checkpoint(const TrainedModel& model, const std::string& path) {
    save_checkpoint(model.dbn, model.cls, path);
}

TwoPhaseSnapshot load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw_error(ErrorCategory::io, "file_open", "cannot open '" + path + "'");
    Reader r;
    r.buf.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    r.path = path;

    r.need(8);
    if (std::memcmp(r.buf.data(), kTag, 8) != 0)
        throw_error(ErrorCategory::format, "ckpt_bad_tag",
                    "'" + path + "' has an unknown container tag");
    r.pos = 8;

    std::uint32_t layers = r.u32();
    if (layers == 0)
        throw_error(ErrorCategory::format, "ckpt_bad_dims",
                    "'" + path + "' declares zero layers");
    std::vector<std::pair<std::uint32_t, std::uint32_t>> dims(layers);
    for (auto& [hidden, visible] : dims) {
        hidden = r.u32();
        visible = r.u32();
        if (hidden == 0 || visible == 0)
            throw_error(ErrorCategory::format, "ckpt_bad_dims",
                        "'" + path + "' declares an empty layer");
    }
    for (std::size_t k = 1; k < dims.size(); ++k)
        if (dims[k].second != dims[k - 1].first)
            throw_error(ErrorCategory::format, "ckpt_bad_dims",
                        "'" + path + "' layer dimensions do not chain");
    std::uint32_t classes = r.u32();
    if (classes == 0)
        throw_error(ErrorCategory::format, "ckpt_bad_dims",
                    "'" + path + "' declares zero classes");

    TwoPhaseSnapshot snap;
    for (auto [hidden, visible] : dims) {
        RbmParams layer{Matrix(hidden, visible), std::vector<double>(visible),
                        std::vector<double>(hidden)};
        for (double& v : layer.W.data()) v = r.f64();
        for (double& v : layer.b) v = r.f64();
        for (double& v : layer.c) v = r.f64();
        snap.dbn.layers.push_back(std::move(layer));
    }
    snap.cls.U = Matrix(classes, dims.back().first);
    for (double& v : snap.cls.U.data()) v = r.f64();
    snap.cls.d.resize(classes);
    for (double& v : snap.cls.d) v = r.f64();
    if (r.pos != r.buf.size())
        throw_error(ErrorCategory::format, "ckpt_trailing",
                    "'" + path + "' has trailing bytes after the payload");
    return snap;
}

} // namespace dbncls

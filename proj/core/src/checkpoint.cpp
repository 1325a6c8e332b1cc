#include "roundtrip/checkpoint.hpp"

#include "roundtrip/errors.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace roundtrip {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'R', 'T', 'D', 'E'};

class Writer {
public:
    template <typename T>
    void put(T value) {
        char raw[sizeof(T)];
        std::memcpy(raw, &value, sizeof(T));
        bytes_.append(raw, sizeof(T));
    }
    void put_bytes(const char* data, std::size_t len) { bytes_.append(data, len); }
    std::string& bytes() { return bytes_; }

private:
    std::string bytes_;
};

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        if (bytes_.size() - pos_ < sizeof(T)) {
            throw CorruptFileError("checkpoint is truncated");
        }
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::string_view data) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size()));
    return static_cast<std::uint32_t>(crc);
}

void write_network(Writer& w, const Mlp& net) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(net.depth()));
    for (const auto& layer : net.layers()) {
        w.put<std::uint32_t>(static_cast<std::uint32_t>(layer.weights.rows()));
        w.put<std::uint32_t>(static_cast<std::uint32_t>(layer.weights.cols()));
        w.put<std::uint8_t>(static_cast<std::uint8_t>(layer.activation.kind));
        w.put<double>(layer.activation.slope);
    }
    for (const auto& layer : net.layers()) {
        for (double v : layer.weights.values()) {
            w.put<double>(v);
        }
        for (double v : layer.bias) {
            w.put<double>(v);
        }
    }
}

Mlp read_network(Reader& r) {
    const auto depth = r.get<std::uint32_t>();
    if (depth == 0 || static_cast<std::size_t>(depth) * 17 > r.remaining()) {
        throw CorruptFileError("checkpoint network header is invalid");
    }
    struct Header {
        std::uint32_t rows, cols;
        Activation act;
    };
    std::vector<Header> headers;
    for (std::uint32_t l = 0; l < depth; ++l) {
        Header h{};
        h.rows = r.get<std::uint32_t>();
        h.cols = r.get<std::uint32_t>();
        const auto tag = r.get<std::uint8_t>();
        if (tag > static_cast<std::uint8_t>(ActivationKind::Sigmoid)) {
            throw CorruptFileError("unknown activation tag " + std::to_string(tag));
        }
        h.act.kind = static_cast<ActivationKind>(tag);
        h.act.slope = r.get<double>();
        headers.push_back(h);
    }
    std::vector<DenseLayer> layers;
    for (const auto& h : headers) {
        const std::size_t count = static_cast<std::size_t>(h.rows) * h.cols + h.rows;
        if (count * sizeof(double) > r.remaining()) {
            throw CorruptFileError("checkpoint is truncated");
        }
        DenseLayer layer;
        layer.weights = Matrix(h.rows, h.cols);
        for (double& v : layer.weights.values()) {
            v = r.get<double>();
        }
        layer.bias.resize(h.rows);
        for (double& v : layer.bias) {
            v = r.get<double>();
        }
        layer.activation = h.act;
        layers.push_back(std::move(layer));
    }
    return Mlp(std::move(layers));
}

} // namespace

std::string serialize_model(const RoundtripModel& model) {
    model.validate();
    Writer w;
    w.put_bytes(kMagic, sizeof(kMagic));
    w.put<std::uint16_t>(kCheckpointVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(model.latent_dim()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(model.data_dim()));
    w.put<double>(model.sigma);
    write_network(w, model.g);
    write_network(w, model.h);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(model.norm.dim()));
    for (double v : model.norm.mins) {
        w.put<double>(v);
    }
    for (double v : model.norm.maxs) {
        w.put<double>(v);
    }
    w.put<std::uint32_t>(crc32_of(w.bytes()));
    return std::move(w.bytes());
}

RoundtripModel deserialize_model(const std::string& bytes) {
    if (bytes.size() < sizeof(kMagic) + sizeof(std::uint16_t) + sizeof(std::uint32_t)) {
        throw CorruptFileError("checkpoint is truncated");
    }
    if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw CorruptFileError("not a checkpoint file (bad magic)");
    }
    std::uint16_t version = 0;
    std::memcpy(&version, bytes.data() + sizeof(kMagic), sizeof(version));
    if (version != kCheckpointVersion) {
        throw VersionError("checkpoint format version " + std::to_string(version) +
                           " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    const std::string_view body(bytes.data(), bytes.size() - sizeof(std::uint32_t));
    std::uint32_t stored_crc = 0;
    std::memcpy(&stored_crc, bytes.data() + body.size(), sizeof(stored_crc));
    if (crc32_of(body) != stored_crc) {
        throw CorruptFileError("checkpoint CRC mismatch (file truncated or damaged)");
    }

    Reader r(body);
    r.get<std::uint32_t>();  // magic
    r.get<std::uint16_t>();  // version
    RoundtripModel model;
    const auto m = r.get<std::uint32_t>();
    const auto n = r.get<std::uint32_t>();
    model.sigma = r.get<double>();
    model.g = read_network(r);
    model.h = read_network(r);
    const auto norm_dim = r.get<std::uint32_t>();
    if (static_cast<std::size_t>(norm_dim) * 16 > r.remaining()) {
        throw CorruptFileError("checkpoint is truncated");
    }
    model.norm.mins.resize(norm_dim);
    model.norm.maxs.resize(norm_dim);
    for (double& v : model.norm.mins) {
        v = r.get<double>();
    }
    for (double& v : model.norm.maxs) {
        v = r.get<double>();
    }
    if (r.remaining() != 0) {
        throw CorruptFileError("checkpoint has trailing bytes");
    }
    if (model.latent_dim() != m || model.data_dim() != n) {
        throw ShapeError("checkpoint header dimensions disagree with its networks");
    }
    model.validate();
    return model;
}

void save_checkpoint(const RoundtripModel& model, const std::filesystem::path& path) {
    const std::string bytes = serialize_model(model);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write checkpoint " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("write failed for checkpoint " + path.string());
    }
}

RoundtripModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return deserialize_model(buffer.str());
}

} // namespace roundtrip

// SPDX-License-Identifier: Apache-2.0
#include "raea/trainer/checkpoint.hpp"

#include <cstring>

#include "raea/common/error.hpp"
#include "raea/common/io.hpp"

namespace raea::train {

namespace {

using nlohmann::json;
using tensor::Tensor;

constexpr char kMagic[8] = {'R', 'A', 'E', 'A', 'C', 'K', 'P', 'T'};

class Writer {
public:
    template <typename T>
    void pod(T v) {
        char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        out_.append(buf, sizeof(T));
    }
    void bytes(std::string_view s) { out_.append(s); }
    void doubles(const Tensor& t) {
        out_.append(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(double));
    }
    std::string& str() { return out_; }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(std::string_view in) : in_(in) {}
    template <typename T>
    T pod() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, in_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string_view bytes(std::size_t n) {
        need(n);
        std::string_view s = in_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    Tensor tensor(std::size_t rows, std::size_t cols) {
        Tensor t = Tensor::matrix(rows, cols);
        const std::size_t n = t.size() * sizeof(double);
        need(n);
        std::memcpy(t.data(), in_.data() + pos_, n);
        pos_ += n;
        return t;
    }
    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) const {
        if (pos_ + n > in_.size()) throw CorruptCheckpoint("checkpoint truncated");
    }
    std::string_view in_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const TrainConfig& cfg, const TrainState& s, const std::string& config_hash,
                                 const std::string& bank_hash) {
    const auto& store = s.params.store();
    json header{{"config", to_json(cfg)},
                {"step", s.step},
                {"rng", s.rng.state()},
                {"config_hash", config_hash},
                {"bank_hash", bank_hash},
                {"params", store.size()},
                {"adam_step", s.adam.step},
                {"history", s.history.size()}};
    const std::string h = header.dump();

    Writer w;
    w.bytes({kMagic, sizeof kMagic});
    w.pod<std::uint32_t>(kCheckpointVersion);
    w.pod<std::uint64_t>(h.size());
    w.bytes(h);
    for (std::size_t i = 0; i < store.size(); ++i) {
        w.pod<std::uint32_t>(static_cast<std::uint32_t>(store.name(i).size()));
        w.bytes(store.name(i));
        w.pod<std::uint64_t>(store[i].rows());
        w.pod<std::uint64_t>(store[i].cols());
        w.doubles(store[i]);
    }
    const bool has_moments = s.adam.m.size() == store.size();
    w.pod<std::uint8_t>(has_moments ? 1 : 0);
    if (has_moments) {
        for (const auto& m : s.adam.m) w.doubles(m);
        for (const auto& v : s.adam.v) w.doubles(v);
    }
    for (const auto& r : s.history) {
        w.pod<std::int64_t>(r.step);
        w.pod<double>(r.lr);
        w.pod<double>(r.loss);
        w.pod<double>(r.grad_norm);
    }
    w.pod<std::uint64_t>(fnv1a64(w.str()));
    return std::move(w.str());
}

Checkpoint parse_checkpoint(const std::string& bytes) {
    if (bytes.size() < sizeof kMagic + 4 + 8 + 8 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
        throw CorruptCheckpoint("not a checkpoint file");
    }
    const std::size_t body = bytes.size() - sizeof(std::uint64_t);
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + body, sizeof stored);
    if (stored != fnv1a64(std::string_view(bytes).substr(0, body))) throw CorruptCheckpoint("checksum mismatch");

    Reader r(std::string_view(bytes).substr(0, body));
    r.bytes(sizeof kMagic);
    const auto version = r.pod<std::uint32_t>();
    if (version != kCheckpointVersion) throw CorruptCheckpoint("unsupported checkpoint version " + std::to_string(version));
    const auto hlen = r.pod<std::uint64_t>();
    json header;
    TrainConfig cfg;
    try {
        header = json::parse(r.bytes(hlen));
        cfg = train_config_from_json(header.at("config"));
    } catch (const json::exception& ex) {
        throw CorruptCheckpoint(std::string("bad checkpoint header: ") + ex.what());
    } catch (const ConfigError& ex) {
        throw CorruptCheckpoint(std::string("bad checkpoint config: ") + ex.what());
    }

    const auto n_params = header.at("params").get<std::size_t>();
    tensor::ParamStore store;
    for (std::size_t i = 0; i < n_params; ++i) {
        const auto nlen = r.pod<std::uint32_t>();
        std::string name(r.bytes(nlen));
        const auto rows = r.pod<std::uint64_t>();
        const auto cols = r.pod<std::uint64_t>();
        if (rows * cols > (std::uint64_t{1} << 28)) throw CorruptCheckpoint("implausible tensor shape for " + name);
        store.add(std::move(name), r.tensor(rows, cols));
    }
    std::vector<Tensor> shapes = store.zeros_like();
    TrainState s{gen::GeneratorParams(cfg.generator, std::move(store)), {}, header.at("step").get<std::int64_t>(),
                 Rng(0), {}};
    s.rng.set_state(header.at("rng").get<std::string>());
    if (r.pod<std::uint8_t>() == 1) {
        for (const auto& t : shapes) s.adam.m.push_back(r.tensor(t.rows(), t.cols()));
        for (const auto& t : shapes) s.adam.v.push_back(r.tensor(t.rows(), t.cols()));
    }
    s.adam.step = header.at("adam_step").get<std::int64_t>();
    const auto n_hist = header.at("history").get<std::size_t>();
    for (std::size_t i = 0; i < n_hist; ++i) {
        LogRow row;
        row.step = r.pod<std::int64_t>();
        row.lr = r.pod<double>();
        row.loss = r.pod<double>();
        row.grad_norm = r.pod<double>();
        s.history.push_back(row);
    }
    if (r.pos() != body) throw CorruptCheckpoint("trailing bytes in checkpoint");
    return {cfg, std::move(s), header.at("config_hash").get<std::string>(), header.at("bank_hash").get<std::string>()};
}

void save_checkpoint(const TrainConfig& cfg, const TrainState& s, const std::filesystem::path& path,
                     const std::string& config_hash, const std::string& bank_hash) {
    atomic_write(path, serialize_checkpoint(cfg, s, config_hash, bank_hash));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

}  // namespace raea::train

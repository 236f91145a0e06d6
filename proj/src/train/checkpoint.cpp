#include "alcgan/train/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "alcgan/error.hpp"

namespace alcgan::train {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'A', 'L', 'C', 'G', 'C', 'K', 'P', 'T'};

struct Entry {
    std::string name;
    Tensor<float>* tensor;
};

// Every tensor in a checkpoint, in archive order.
template <typename C>
std::vector<Entry> entries(C& ck) {
    std::vector<Entry> out;
    auto add_net = [&](const std::string& tag, auto params, Adam& adam) {
        std::size_t slot = 0;
        for (auto& p : params) out.push_back({tag + "." + p.name, p.value});
        for (auto& p : params) {
            if (!p.grad) continue;
            if (slot < adam.first_moment.size()) {
                out.push_back({"adam." + tag + ".m." + p.name, &adam.first_moment[slot]});
                out.push_back({"adam." + tag + ".v." + p.name, &adam.second_moment[slot]});
            }
            ++slot;
        }
    };
    add_net("G", ck.generator.parameters(), ck.adam_g);
    add_net("D", ck.discriminator.parameters(), ck.adam_d);
    return out;
}

template <typename V>
void put(std::string& buf, V v) {
    char raw[sizeof(V)];
    std::memcpy(raw, &v, sizeof(V));
    buf.append(raw, sizeof(V));
}

class Reader {
public:
    explicit Reader(std::string data) : data_(std::move(data)) {}

    template <typename V>
    V get() {
        V v;
        std::memcpy(&v, take(sizeof(V)), sizeof(V));
        return v;
    }
    const char* take(std::size_t n) {
        if (n > data_.size() - pos_) throw ValidationError("checkpoint", "file is truncated or corrupt");
        const char* p = data_.data() + pos_;
        pos_ += n;
        return p;
    }
    bool at_end() const noexcept { return pos_ == data_.size(); }

private:
    std::string data_;
    std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    auto& ck = const_cast<Checkpoint&>(checkpoint); // parameters() is non-const; nothing is modified
    std::ostringstream rng;
    rng << ck.rng;
    const nlohmann::json header = {{"model", ck.model.to_json()},
                                   {"training", ck.training.to_json()},
                                   {"epoch", ck.epoch},
                                   {"step", ck.step},
                                   {"rng", rng.str()},
                                   {"adam_g_steps", ck.adam_g.t_},
                                   {"adam_d_steps", ck.adam_d.t_}};
    const std::string text = header.dump();
    const auto list = entries(ck);

    std::string buf(kMagic, sizeof(kMagic));
    put<std::uint32_t>(buf, kCheckpointVersion);
    put<std::uint64_t>(buf, text.size());
    buf += text;
    put<std::uint32_t>(buf, static_cast<std::uint32_t>(list.size()));
    for (const auto& e : list) {
        put<std::uint32_t>(buf, static_cast<std::uint32_t>(e.name.size()));
        buf += e.name;
        for (int d : e.tensor->shape()) put<std::uint32_t>(buf, static_cast<std::uint32_t>(d));
        buf.append(reinterpret_cast<const char*>(e.tensor->data()), e.tensor->size() * sizeof(float));
    }

    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (!out) throw IoError("write failed for " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    Reader in(read_file(path));
    if (std::memcmp(in.take(sizeof(kMagic)), kMagic, sizeof(kMagic)) != 0) {
        throw ValidationError("checkpoint", path.string() + " is not a checkpoint");
    }
    const auto version = in.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw ValidationError("version", "checkpoint format " + std::to_string(version) + ", expected " +
                                             std::to_string(kCheckpointVersion));
    }
    const auto header_len = in.get<std::uint64_t>();
    nlohmann::json header;
    try {
        const char* p = in.take(header_len);
        header = nlohmann::json::parse(p, p + header_len);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("checkpoint", std::string("corrupt header: ") + e.what());
    }

    Checkpoint ck(model::ModelConfig::from_json(header.at("model")),
                  TrainingConfig::from_json(header.at("training")));
    ck.epoch = header.at("epoch").get<int>();
    ck.step = header.at("step").get<std::int64_t>();
    std::istringstream(header.at("rng").get<std::string>()) >> ck.rng;
    ck.adam_g.t_ = header.at("adam_g_steps").get<std::int64_t>();
    ck.adam_d.t_ = header.at("adam_d_steps").get<std::int64_t>();

    std::map<std::string, std::pair<std::array<int, 4>, std::vector<float>>> stored;
    const auto count = in.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = in.get<std::uint32_t>();
        std::string name(in.take(len), len);
        std::array<int, 4> shape{};
        std::size_t size = 1;
        for (int& d : shape) {
            d = static_cast<int>(in.get<std::uint32_t>());
            size *= static_cast<std::size_t>(d);
        }
        std::vector<float> values(size);
        std::memcpy(values.data(), in.take(size * sizeof(float)), size * sizeof(float));
        stored.emplace(std::move(name), std::make_pair(shape, std::move(values)));
    }
    if (!in.at_end()) throw ValidationError("checkpoint", "trailing bytes after tensor data");

    // Adam moments exist only after the first step.
    auto make_moments = [](Adam& adam, auto params) {
        adam.first_moment.clear();
        adam.second_moment.clear();
        if (adam.t_ == 0) return;
        for (auto& p : params) {
            if (!p.grad) continue;
            const auto& s = p.value->shape();
            adam.first_moment.emplace_back(s[0], s[1], s[2], s[3]);
            adam.second_moment.emplace_back(s[0], s[1], s[2], s[3]);
        }
    };
    make_moments(ck.adam_g, ck.generator.parameters());
    make_moments(ck.adam_d, ck.discriminator.parameters());

    for (const auto& e : entries(ck)) {
        auto it = stored.find(e.name);
        if (it == stored.end()) throw ValidationError("checkpoint", "missing tensor '" + e.name + "'");
        if (it->second.first != e.tensor->shape()) {
            throw ValidationError("checkpoint", "tensor '" + e.name + "' has the wrong shape");
        }
        std::copy(it->second.second.begin(), it->second.second.end(), e.tensor->data());
    }
    return ck;
}

std::string file_sha256(const std::filesystem::path& path) {
    const std::string data = read_file(path);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw IoError("SHA-256 failed for " + path.string());
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xF];
    }
    return out;
}

} // namespace alcgan::train

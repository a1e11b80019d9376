#include "waveletgan/checkpoint.hpp"

#include "waveletgan/errors.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

namespace wg::io {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xFF));
}

struct Reader {
    const std::vector<std::uint8_t>& bytes;
    std::size_t offset = 0;
    std::string origin;

    void need(std::size_t n, const char* what) const {
        if (offset + n > bytes.size())
            throw FormatError(origin + ": truncated " + what + " at byte offset " +
                              std::to_string(offset));
    }
    std::uint16_t u16(const char* what) {
        need(2, what);
        std::uint16_t v = static_cast<std::uint16_t>(bytes[offset] | (bytes[offset + 1] << 8));
        offset += 2;
        return v;
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
        offset += 4;
        return v;
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return bytes[offset++];
    }
    double f64(const char* what) {
        need(8, what);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[offset + i]) << (8 * i);
        offset += 8;
        return std::bit_cast<double>(bits);
    }
    std::string str(std::size_t n, const char* what) {
        need(n, what);
        std::string s(reinterpret_cast<const char*>(bytes.data() + offset), n);
        offset += n;
        return s;
    }
};

} // namespace

std::vector<std::uint8_t> encode_tensor_file(const std::vector<NamedTensor>& tensors) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kCheckpointMagic, kCheckpointMagic + 4);
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& nt : tensors) {
        if (nt.name.size() > 0xFFFF) throw ParameterError("tensor name too long: " + nt.name);
        put_u16(out, static_cast<std::uint16_t>(nt.name.size()));
        out.insert(out.end(), nt.name.begin(), nt.name.end());
        out.push_back(static_cast<std::uint8_t>(nt.tensor.rank()));
        for (std::size_t d : nt.tensor.shape()) put_u32(out, static_cast<std::uint32_t>(d));
        for (std::size_t i = 0; i < nt.tensor.size(); ++i) put_f64(out, nt.tensor[i]);
    }
    return out;
}

std::vector<NamedTensor> decode_tensor_file(const std::vector<std::uint8_t>& bytes,
                                            const std::string& origin) {
    Reader r{bytes, 0, origin};
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
        throw FormatError(origin + ": bad magic at byte offset 0 (want \"WGC1\")");
    r.offset = 4;
    const std::uint32_t version = r.u32("version");
    if (version != kCheckpointVersion)
        throw FormatError(origin + ": unsupported version " + std::to_string(version) +
                          " at byte offset 4");
    const std::uint32_t count = r.u32("tensor count");
    std::vector<NamedTensor> tensors;
    tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t name_len = r.u16("name length");
        std::string name = r.str(name_len, "name");
        const std::uint8_t rank = r.u8("rank");
        std::vector<std::size_t> shape(rank);
        std::size_t total = 1;
        for (std::uint8_t d = 0; d < rank; ++d) {
            shape[d] = r.u32("dimension");
            if (shape[d] == 0 || total > (1ull << 40) / std::max<std::size_t>(shape[d], 1))
                throw FormatError(origin + ": dimension overflow in tensor \"" + name +
                                  "\" at byte offset " + std::to_string(r.offset - 4));
            total *= shape[d];
        }
        std::vector<double> data(total);
        for (std::size_t j = 0; j < total; ++j) data[j] = r.f64("payload");
        tensors.push_back({std::move(name), Tensor(std::move(shape), std::move(data))});
    }
    return tensors;
}

void save_tensor_file(const std::string& path, const std::vector<NamedTensor>& tensors) {
    const std::vector<std::uint8_t> blob = encode_tensor_file(tensors);
    write_file_atomic(path, blob.data(), blob.size());
}

std::vector<NamedTensor> load_tensor_file(const std::string& path) {
    return decode_tensor_file(read_file(path), path);
}

// ------------------------------------------------------------ model glue

namespace {

Tensor scalar(double v) { return Tensor({1}, {v}); }

// u64 split into two exactly-representable u32 halves.
Tensor u64_tensor(std::uint64_t v) {
    return Tensor({2}, {static_cast<double>(v >> 32), static_cast<double>(v & 0xFFFFFFFFull)});
}

std::uint64_t u64_from(const Tensor& t, const std::string& name) {
    if (t.size() != 2) throw FormatError("checkpoint: " + name + " must have 2 entries");
    return (static_cast<std::uint64_t>(t[0]) << 32) | static_cast<std::uint64_t>(t[1]);
}

Tensor string_tensor(const std::string& s) {
    Tensor t({s.size()});
    for (std::size_t i = 0; i < s.size(); ++i)
        t[i] = static_cast<double>(static_cast<unsigned char>(s[i]));
    return t;
}

std::string string_from(const Tensor& t) {
    std::string s(t.size(), '\0');
    for (std::size_t i = 0; i < t.size(); ++i) s[i] = static_cast<char>(t[i]);
    return s;
}

std::vector<NamedTensor> collect_model_tensors(gan::GanModel& model,
                                               const gan::BatchSampler* sampler) {
    const gan::ArchConfig& cfg = model.cfg;
    std::vector<NamedTensor> out;
    // architecture metadata first, fixed order
    out.push_back({"meta/variant", scalar(cfg.variant == gan::Variant::mnist28 ? 0.0 : 1.0)});
    out.push_back({"meta/base_width", scalar(static_cast<double>(cfg.base_width))});
    out.push_back({"meta/z_dim", scalar(static_cast<double>(cfg.z_dim))});
    out.push_back({"meta/wavelet_enabled", scalar(cfg.wavelet_enabled ? 1.0 : 0.0)});
    out.push_back({"meta/wavelet_channels", scalar(static_cast<double>(cfg.wavelet_channels))});
    out.push_back({"meta/wavelet_K", scalar(static_cast<double>(cfg.wavelet_kernel_width))});
    out.push_back({"meta/sigma", scalar(cfg.wavelet_sigma)});
    if (cfg.wavelet_enabled)
        out.push_back({"meta/wavelet_scales", Tensor({cfg.wavelet_channels}, cfg.effective_scales())});
    out.push_back({"meta/mode", scalar(cfg.mode == gan::GenMode::direct ? 0.0 : 1.0)});
    out.push_back({"meta/conditional", scalar(cfg.conditional ? 1.0 : 0.0)});
    out.push_back({"meta/n_classes", scalar(static_cast<double>(cfg.n_classes))});
    out.push_back({"meta/loss", scalar(cfg.loss == gan::LossKind::hinge ? 0.0 : 1.0)});
    out.push_back({"meta/batch", scalar(static_cast<double>(cfg.batch))});
    out.push_back({"meta/n_disc", scalar(static_cast<double>(cfg.n_disc))});
    out.push_back({"meta/lr", scalar(cfg.lr)});
    out.push_back({"meta/beta1", scalar(cfg.beta1)});
    out.push_back({"meta/beta2", scalar(cfg.beta2)});
    out.push_back({"meta/residual_alpha", scalar(cfg.residual_alpha)});
    out.push_back({"meta/seed", u64_tensor(cfg.seed)});

    for (nn::Parameter* p : model.generator.params()) out.push_back({p->name, p->value});
    for (nn::Parameter* p : model.discriminator.params()) out.push_back({p->name, p->value});
    for (auto& [name, t] : model.generator.state()) out.push_back({name, *t});
    for (auto& [name, t] : model.discriminator.state()) out.push_back({name, *t});

    auto dump_opt = [&out](const char* prefix, nn::Adam& opt) {
        for (auto& e : opt.entries()) {
            out.push_back({std::string("adam/") + e.param->name + "/m", e.state.m});
            out.push_back({std::string("adam/") + e.param->name + "/v", e.state.v});
            out.push_back({std::string("adam/") + e.param->name + "/t",
                           scalar(static_cast<double>(e.state.t))});
        }
        out.push_back({std::string("opt/") + prefix + "/step_count",
                       scalar(static_cast<double>(opt.step_count()))});
    };
    dump_opt("g", *model.opt_g);
    dump_opt("d", *model.opt_d);

    out.push_back({"trainer/step", scalar(static_cast<double>(model.step))});
    out.push_back({"trainer/d_update_count", scalar(static_cast<double>(model.d_update_count))});
    out.push_back({"trainer/g_update_count", scalar(static_cast<double>(model.g_update_count))});
    out.push_back({"trainer/rng", string_tensor(model.train_rng.state_string())});
    if (sampler && sampler->size() > 0) {
        auto perm = const_cast<gan::BatchSampler*>(sampler)->permutation();
        Tensor pt({perm.size()});
        for (std::size_t i = 0; i < perm.size(); ++i) pt[i] = static_cast<double>(perm[i]);
        out.push_back({"trainer/sampler_perm", std::move(pt)});
        out.push_back({"trainer/sampler_cursor",
                       scalar(static_cast<double>(
                           const_cast<gan::BatchSampler*>(sampler)->cursor()))});
    }
    return out;
}

} // namespace

void save_checkpoint(gan::GanModel& model, const std::string& path,
                     const gan::BatchSampler* sampler) {
    save_tensor_file(path, collect_model_tensors(model, sampler));
}

gan::GanModel load_checkpoint(const std::string& path, gan::BatchSampler* sampler_out) {
    const std::vector<NamedTensor> tensors = load_tensor_file(path);
    std::map<std::string, const Tensor*> by_name;
    for (const auto& nt : tensors) {
        if (!by_name.emplace(nt.name, &nt.tensor).second)
            throw FormatError(path + ": duplicate tensor \"" + nt.name + "\"");
    }
    auto want = [&](const std::string& name) -> const Tensor& {
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw FormatError(path + ": missing tensor \"" + name + "\"");
        return *it->second;
    };
    auto want_scalar = [&](const std::string& name) { return want(name)[0]; };

    gan::ArchConfig cfg;
    cfg.variant = want_scalar("meta/variant") == 0.0 ? gan::Variant::mnist28 : gan::Variant::rgb32;
    cfg.base_width = static_cast<std::size_t>(want_scalar("meta/base_width"));
    cfg.z_dim = static_cast<std::size_t>(want_scalar("meta/z_dim"));
    cfg.wavelet_enabled = want_scalar("meta/wavelet_enabled") != 0.0;
    cfg.wavelet_channels = static_cast<std::size_t>(want_scalar("meta/wavelet_channels"));
    cfg.wavelet_kernel_width = static_cast<std::size_t>(want_scalar("meta/wavelet_K"));
    cfg.wavelet_sigma = want_scalar("meta/sigma");
    if (cfg.wavelet_enabled) {
        const Tensor& s = want("meta/wavelet_scales");
        cfg.wavelet_scales.assign(s.data(), s.data() + s.size());
    }
    cfg.mode = want_scalar("meta/mode") == 0.0 ? gan::GenMode::direct : gan::GenMode::residual;
    cfg.conditional = want_scalar("meta/conditional") != 0.0;
    cfg.n_classes = static_cast<std::size_t>(want_scalar("meta/n_classes"));
    cfg.loss = want_scalar("meta/loss") == 0.0 ? gan::LossKind::hinge : gan::LossKind::minimax;
    cfg.batch = static_cast<std::size_t>(want_scalar("meta/batch"));
    cfg.n_disc = static_cast<std::size_t>(want_scalar("meta/n_disc"));
    cfg.lr = want_scalar("meta/lr");
    cfg.beta1 = want_scalar("meta/beta1");
    cfg.beta2 = want_scalar("meta/beta2");
    cfg.residual_alpha = want_scalar("meta/residual_alpha");
    cfg.seed = u64_from(want("meta/seed"), "meta/seed");

    gan::GanModel model = gan::build_gan(cfg);

    auto restore = [&](Tensor& dst, const std::string& name) {
        const Tensor& src = want(name);
        if (!(src.shape() == dst.shape()))
            throw FormatError(path + ": tensor \"" + name + "\" has shape " + src.shape_str() +
                              ", model expects " + dst.shape_str());
        dst = src;
    };

    for (nn::Parameter* p : model.generator.params()) restore(p->value, p->name);
    for (nn::Parameter* p : model.discriminator.params()) restore(p->value, p->name);
    for (auto& [name, t] : model.generator.state()) restore(*t, name);
    for (auto& [name, t] : model.discriminator.state()) restore(*t, name);

    auto load_opt = [&](const char* prefix, nn::Adam& opt) {
        for (auto& e : opt.entries()) {
            restore(e.state.m, "adam/" + e.param->name + "/m");
            restore(e.state.v, "adam/" + e.param->name + "/v");
            e.state.t = static_cast<std::int64_t>(want_scalar("adam/" + e.param->name + "/t"));
        }
        opt.set_step_count(static_cast<std::int64_t>(
            want_scalar(std::string("opt/") + prefix + "/step_count")));
    };
    load_opt("g", *model.opt_g);
    load_opt("d", *model.opt_d);

    model.step = static_cast<std::int64_t>(want_scalar("trainer/step"));
    model.d_update_count = static_cast<std::int64_t>(want_scalar("trainer/d_update_count"));
    model.g_update_count = static_cast<std::int64_t>(want_scalar("trainer/g_update_count"));
    model.train_rng.set_state_string(string_from(want("trainer/rng")));

    if (sampler_out) {
        auto it = by_name.find("trainer/sampler_perm");
        if (it != by_name.end()) {
            const Tensor& pt = *it->second;
            *sampler_out = gan::BatchSampler(pt.size());
            for (std::size_t i = 0; i < pt.size(); ++i)
                sampler_out->permutation()[i] = static_cast<std::uint32_t>(pt[i]);
            sampler_out->cursor() =
                static_cast<std::size_t>(want_scalar("trainer/sampler_cursor"));
        }
    }
    return model;
}

std::string describe_checkpoint(const std::string& path) {
    const std::vector<NamedTensor> tensors = load_tensor_file(path);
    std::ostringstream os;
    os << path << ": " << tensors.size() << " tensors (format WGC1 v" << kCheckpointVersion
       << ")\n";
    std::size_t total = 0;
    for (const auto& nt : tensors) {
        os << "  " << nt.name << "  " << nt.tensor.shape_str();
        if (nt.name == "trainer/step" || nt.name.rfind("meta/", 0) == 0 ||
            nt.name.rfind("trainer/", 0) == 0) {
            if (nt.tensor.size() <= 8 && nt.name != "trainer/rng") {
                os << "  =";
                for (std::size_t i = 0; i < nt.tensor.size(); ++i) os << ' ' << nt.tensor[i];
            }
        }
        os << '\n';
        total += nt.tensor.size();
    }
    os << "  total values: " << total << '\n';
    auto it = std::find_if(tensors.begin(), tensors.end(),
                           [](const NamedTensor& nt) { return nt.name == "g/wavelet/scales"; });
    if (it != tensors.end()) {
        os << "  wavelet scales:";
        for (std::size_t i = 0; i < it->tensor.size(); ++i) os << ' ' << it->tensor[i];
        os << '\n';
    } else {
        os << "  wavelet scales: (layer disabled)\n";
    }
    return os.str();
}

} // namespace wg::io

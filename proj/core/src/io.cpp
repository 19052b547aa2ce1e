#include "hystop/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "hystop/error.hpp"

namespace hystop {

namespace fs = std::filesystem;

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) raise(ErrorKind::Io, "cannot open '" + path + "' for writing");
    os << text;
    if (!os) raise(ErrorKind::Io, "failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) raise(ErrorKind::Io, "cannot open '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return text;
}

// ---------------------------------------------------------------------------
// loop CSV
// ---------------------------------------------------------------------------

void write_loop_csv(const std::string& path, const LoopRecord& rec,
                    const std::string& params_hash) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) raise(ErrorKind::Io, "cannot open '" + path + "' for writing");
    os << "t_s,b_T,h_Apm\n";
    char line[128];
    const int n = static_cast<int>(rec.b.size());
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / (rec.freq * n);
        snprintf(line, sizeof(line), "%.17g,%.17g,%.17g\n", t, rec.b[static_cast<size_t>(i)],
                 rec.h[static_cast<size_t>(i)]);
        os << line;
    }
    if (!os) raise(ErrorKind::Io, "failed writing '" + path + "'");

    nlohmann::json side;
    side["freq_hz"] = rec.freq;
    side["b_peak_T"] = rec.b_peak;
    side["phase_rad"] = rec.phase;
    side["params_hash"] = params_hash;
    write_text_file(path + ".json", side.dump(2));
}

LoopRecord read_loop_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) raise(ErrorKind::Io, "cannot open '" + path + "'");
    std::string header;
    if (!std::getline(is, header) || header != "t_s,b_T,h_Apm")
        raise(ErrorKind::Io, "'" + path + "': bad loop CSV header");
    LoopRecord rec;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        double t, b, h;
        if (sscanf(line.c_str(), "%lf,%lf,%lf", &t, &b, &h) != 3)
            raise(ErrorKind::Io, "'" + path + "': bad CSV row '" + line + "'");
        rec.b.push_back(b);
        rec.h.push_back(h);
    }
    nlohmann::json side = nlohmann::json::parse(read_text_file(path + ".json"), nullptr, false);
    if (side.is_discarded()) raise(ErrorKind::Io, "'" + path + ".json': bad sidecar JSON");
    rec.freq = side.at("freq_hz").get<double>();
    rec.b_peak = side.at("b_peak_T").get<double>();
    rec.phase = side.at("phase_rad").get<double>();
    return rec;
}

// ---------------------------------------------------------------------------
// material parameters
// ---------------------------------------------------------------------------

std::string material_params_json(const MaterialParams& params) {
    nlohmann::json j;
    j["thickness_m"] = params.thickness_m;
    j["resistivity_ohm_m"] = params.resistivity_ohm_m;
    j["ja"] = {{"ms", params.ja.ms},
               {"a", params.ja.a},
               {"k", params.ja.k_pin},
               {"c", params.ja.c_rev},
               {"alpha", params.ja.alpha}};
    j["g_coeffs"] = params.g_coeffs;
    j["alpha_exc"] = params.alpha_exc;
    j["substeps"] = params.substeps;
    return j.dump(2);
}

MaterialParams material_params_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) raise(ErrorKind::Config, "material parameters: invalid JSON");
    MaterialParams p;
    try {
        p.thickness_m = j.at("thickness_m").get<double>();
        p.resistivity_ohm_m = j.at("resistivity_ohm_m").get<double>();
        const auto& ja = j.at("ja");
        p.ja.ms = ja.at("ms").get<double>();
        p.ja.a = ja.at("a").get<double>();
        p.ja.k_pin = ja.at("k").get<double>();
        p.ja.c_rev = ja.at("c").get<double>();
        p.ja.alpha = ja.at("alpha").get<double>();
        p.g_coeffs = j.at("g_coeffs").get<std::vector<double>>();
        p.alpha_exc = j.at("alpha_exc").get<double>();
        p.substeps = j.value("substeps", 10);
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorKind::Config, std::string("material parameters: ") + e.what());
    }
    p.validate();
    return p;
}

MaterialParams load_material_params(const std::string& path) {
    return material_params_from_json(read_text_file(path));
}

// ---------------------------------------------------------------------------
// dataset archive
// ---------------------------------------------------------------------------

void write_dataset(const std::string& dir, const DatasetManifest& manifest,
                   const std::vector<LoopRecord>& loops, const std::vector<SampleMeta>& meta) {
    if (loops.size() != meta.size())
        raise(ErrorKind::Input, "write_dataset: loop and provenance counts differ");
    fs::create_directories(dir);
    nlohmann::json j;
    j["schema"] = "hystop-dataset/1";
    j["regime"] = manifest.regime;
    if (manifest.has_scales) {
        j["scheme"] = manifest.scale.scheme;
        j["b_scale"] = manifest.scale.b_scale;
        j["h_scale"] = manifest.scale.h_scale;
        j["t_scale_s"] = manifest.t_scale_s;
        j["f_scale_hz"] = manifest.f_scale_hz;
    }
    j["augmentation"] = {{"n_shifts", manifest.n_shifts},
                         {"sigma", manifest.sigma},
                         {"mu", manifest.mu},
                         {"seed", manifest.augment_seed}};
    j["split_seed"] = manifest.split_seed;
    j["params_hash"] = manifest.params_hash;
    j["length"] = manifest.length;
    nlohmann::json entries = nlohmann::json::array();
    char name[64];
    for (size_t i = 0; i < loops.size(); ++i) {
        snprintf(name, sizeof(name), "loop_%04zu.csv", i);
        write_loop_csv(dir + "/" + name, loops[i], manifest.params_hash);
        entries.push_back({{"file", name},
                           {"freq_hz", meta[i].freq},
                           {"b_peak_T", meta[i].b_peak},
                           {"shift", meta[i].shift},
                           {"noisy", meta[i].noisy},
                           {"source_index", meta[i].source_index}});
    }
    j["loops"] = entries;
    write_text_file(dir + "/manifest.json", j.dump(2));
}

DatasetArchive read_dataset(const std::string& dir) {
    nlohmann::json j = nlohmann::json::parse(read_text_file(dir + "/manifest.json"), nullptr, false);
    if (j.is_discarded()) raise(ErrorKind::Io, "'" + dir + "/manifest.json': invalid JSON");
    DatasetArchive out;
    try {
        out.manifest.regime = j.at("regime").get<std::string>();
        out.manifest.has_scales = j.contains("b_scale");
        if (out.manifest.has_scales) {
            out.manifest.scale.scheme = j.value("scheme", "max_abs");
            out.manifest.scale.b_scale = j.at("b_scale").get<double>();
            out.manifest.scale.h_scale = j.at("h_scale").get<double>();
            out.manifest.t_scale_s = j.at("t_scale_s").get<double>();
            out.manifest.f_scale_hz = j.at("f_scale_hz").get<double>();
        }
        const auto& aug = j.at("augmentation");
        out.manifest.n_shifts = aug.at("n_shifts").get<int>();
        out.manifest.sigma = aug.at("sigma").get<double>();
        out.manifest.mu = aug.value("mu", 0.0);
        out.manifest.augment_seed = aug.at("seed").get<uint64_t>();
        out.manifest.split_seed = j.at("split_seed").get<uint64_t>();
        out.manifest.params_hash = j.at("params_hash").get<std::string>();
        out.manifest.length = j.at("length").get<int>();
        for (const auto& entry : j.at("loops")) {
            LoopRecord rec = read_loop_csv(dir + "/" + entry.at("file").get<std::string>());
            SampleMeta m;
            m.freq = entry.at("freq_hz").get<double>();
            m.b_peak = entry.at("b_peak_T").get<double>();
            m.shift = entry.at("shift").get<int>();
            m.noisy = entry.at("noisy").get<bool>();
            m.source_index = entry.at("source_index").get<int>();
            out.meta.push_back(m);
            out.loops.push_back(std::move(rec));
        }
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorKind::Io, "'" + dir + "/manifest.json': " + e.what());
    }
    return out;
}

// ---------------------------------------------------------------------------
// binary tensor cache
// ---------------------------------------------------------------------------

namespace {
constexpr char kCacheMagic[8] = {'H', 'Y', 'S', 'T', '0', '0', '0', '1'};
}

void write_tensor_cache(const std::string& path, const Tensor& t) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) raise(ErrorKind::Io, "cannot open '" + path + "' for writing");
    os.write(kCacheMagic, sizeof(kCacheMagic));
    const uint32_t ndim = static_cast<uint32_t>(t.shape.size());
    os.write(reinterpret_cast<const char*>(&ndim), sizeof(ndim));
    for (int d : t.shape) {
        const int64_t v = d;
        os.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
    std::vector<float> f32(t.data.begin(), t.data.end());
    os.write(reinterpret_cast<const char*>(f32.data()),
             static_cast<std::streamsize>(f32.size() * sizeof(float)));
    if (!os) raise(ErrorKind::Io, "failed writing '" + path + "'");
}

Tensor read_tensor_cache(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) raise(ErrorKind::Io, "cannot open '" + path + "'");
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kCacheMagic, sizeof(kCacheMagic)) != 0)
        raise(ErrorKind::Io, "'" + path + "' is not a HYST0001 tensor cache");
    uint32_t ndim = 0;
    is.read(reinterpret_cast<char*>(&ndim), sizeof(ndim));
    std::vector<int> shape(ndim);
    for (uint32_t i = 0; i < ndim; ++i) {
        int64_t v = 0;
        is.read(reinterpret_cast<char*>(&v), sizeof(v));
        shape[i] = static_cast<int>(v);
    }
    Tensor t(shape);
    std::vector<float> f32(t.data.size());
    is.read(reinterpret_cast<char*>(f32.data()),
            static_cast<std::streamsize>(f32.size() * sizeof(float)));
    if (!is) raise(ErrorKind::Io, "'" + path + "': truncated tensor cache");
    std::copy(f32.begin(), f32.end(), t.data.begin());
    return t;
}

} // namespace hystop

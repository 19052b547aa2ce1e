#pragma once

#include <string>
#include <vector>

#include "hystop/dataset.hpp"
#include "hystop/material.hpp"
#include "hystop/tensor.hpp"

namespace hystop {

// -- single loop: CSV with header t_s,b_T,h_Apm plus a JSON sidecar ---------

void write_loop_csv(const std::string& path, const LoopRecord& rec,
                    const std::string& params_hash);
LoopRecord read_loop_csv(const std::string& path);

// -- material parameter file (JSON, SI units) --------------------------------

std::string material_params_json(const MaterialParams& params);
MaterialParams material_params_from_json(const std::string& text);
MaterialParams load_material_params(const std::string& path);

// -- dataset archive: directory of loop CSVs + manifest.json -----------------

struct DatasetManifest {
    std::string regime = "none"; // none | cyclic | cyclic+gda
    bool has_scales = false;     // raw corpora carry no normalization yet
    NormScale scale;
    double t_scale_s = 0.0;
    double f_scale_hz = 0.0;
    int n_shifts = 10;
    double sigma = 0.05;
    double mu = 0.0;
    uint64_t augment_seed = 0;
    uint64_t split_seed = 0;
    std::string params_hash;
    int length = 0;
};

struct DatasetArchive {
    DatasetManifest manifest;
    std::vector<LoopRecord> loops;
    std::vector<SampleMeta> meta;
};

void write_dataset(const std::string& dir, const DatasetManifest& manifest,
                   const std::vector<LoopRecord>& loops, const std::vector<SampleMeta>& meta);
DatasetArchive read_dataset(const std::string& dir);

// -- optional binary tensor cache (magic HYST0001, little-endian, f32) -------

void write_tensor_cache(const std::string& path, const Tensor& t);
Tensor read_tensor_cache(const std::string& path);

// -- small file helpers -------------------------------------------------------

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

} // namespace hystop

#ifndef EEGSAL_DATASET_HPP
#define EEGSAL_DATASET_HPP

#include <string>
#include <vector>

#include "eegsal/saliency.hpp"
#include "eegsal/tensor.hpp"

namespace eegsal {

// One multichannel EEG trial, [channels C x time samples T].
struct EEGEpoch {
    Tensor data;
    int subject_id = 0;
    std::string stimulus_id;
};

enum class Split { train, test };

struct StimulusRecord {
    std::string stimulus_id;
    Tensor image;          // [3,H,W] in [0,1]
    SaliencyMap saliency;  // same H,W
    EEGEpoch eeg;
    int class_label = -1;  // synthetic data only; -1 when unknown
    Split split = Split::train;
};

struct PairedDataset {
    std::vector<StimulusRecord> records;
    int channels = 0;
    int samples = 0;
    int height = 0;
    int width = 0;

    std::vector<const StimulusRecord*> split_records(Split s) const {
        std::vector<const StimulusRecord*> out;
        for (auto& r : records)
            if (r.split == s) out.push_back(&r);
        return out;
    }
};

struct SyntheticSpec {
    int n_records = 16;
    int n_classes = 4;
    int channels = 64;
    int samples = 250;
    int height = 64;
    int width = 64;
    double noise_level = 0.1;
};

// Colored geometric shapes on gray: class fixes shape+hue, position is random.
// Saliency is the blurred shape mask; EEG is a class-specific temporal template
// on a class-specific channel subset, amplitude-modulated by shape position.
PairedDataset generate_synthetic(const SyntheticSpec& spec, uint64_t seed);

// On-disk layout: manifest.json, images/{id}.png, saliency/{id}.png, eeg/{id}.f32
// (little-endian float32, row-major [C x T]). This is also the ingestion
// contract for real preprocessed data.
void save_dataset(const PairedDataset& ds, const std::string& root);
PairedDataset load_dataset(const std::string& root);

// Deterministic stratified split; tags records in place on the returned copy.
PairedDataset split_dataset(const PairedDataset& ds, double test_fraction, uint64_t seed);

bool datasets_equal(const PairedDataset& a, const PairedDataset& b);

}  // namespace eegsal

#endif

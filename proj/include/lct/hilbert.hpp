#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lct/dbp.hpp"

namespace lct {

// How the offset C of the finite inversion is fixed.
//  zero_band: f averages to zero over the known-zero bands outside the support.
//  zero_mean: f averages to zero over the whole usable row. A single segment's
//             limited-angle component integrates to zero along every
//             filtering line.
//  zero_sum:  the offsets of all segments are fitted jointly (least squares)
//             so that the summed image vanishes outside the support. Only
//             meaningful in bpf_reconstruct; rows start from zero_mean.
enum class OffsetMode { zero_band, zero_mean, zero_sum };
std::string to_string(OffsetMode m);
OffsetMode offset_mode_from_string(const std::string& s);

struct FiniteHilbertLine {
    std::vector<double> samples;  // g at t_j = L + (j + 1/2) d, d = (U - L) / n
    double L = -1.0;
    double U = 1.0;
    double t_lo = 0.0;  // known support [t_lo, t_hi]; t_lo == t_hi means no support on this line
    double t_hi = 0.0;
    double eps_margin = 0.0;  // 0 selects 2 grid steps
};

struct FiniteInverse {
    std::vector<double> f;
    std::vector<std::uint8_t> flagged;  // within eps of L or U (prefactor clipped)
    std::vector<double> dfdC;           // change of f per unit change of C
    double C = 0.0;
};

// Inverse finite Hilbert transform on [L, U]:
//   f(t) = -1/sqrt((t-L)(U-t)) * [ (1/pi) PV int sqrt((t'-L)(U-t')) g(t') / (t - t') dt' + C ].
// Nodes t' sit on the cell edges (half a step from every output sample), g is
// averaged onto them, and each node carries the exact integral of the square
// root weight over its cell.
FiniteInverse finite_inverse_1d(const FiniteHilbertLine& line, OffsetMode mode = OffsetMode::zero_band);

struct Recon {
    Image values;
    Mask valid;
};

struct DirectionalOptions {
    double pad_rate = 0.5;
    double support_radius = 0.0;
    Vec2 support_center{};
    OffsetMode mode = OffsetMode::zero_band;
    double eps_steps = 2.0;
};

// Filtering-line frame: rows of a padded P x P grid run along e.
struct RotatedInverse {
    ImageGrid grid;
    int P = 0;
    Vec2 e{}, en{};
    Image f;
    Image dfdC;  // per-row offset basis, 0 off the inverted run
    Mask valid;
};

// Rotate the DBP so filtering lines become rows of a padded grid (bilinear)
// and invert every row over its valid run.
RotatedInverse invert_rows(const DBPImage& dbp, const ImageGrid& grid, const DirectionalOptions& opt,
                           Exec exec = Exec::parallel);
// Same, with the DBP evaluated directly at the rotated grid points (no
// interpolation of a DBP image).
RotatedInverse invert_rows(const Sinogram& sino, const DerivTable& deriv, const ImageGrid& grid,
                           const DirectionalOptions& opt, FovRule rule = FovRule::detector_bounded,
                           Exec exec = Exec::parallel);
Recon rotate_back(const RotatedInverse& rot, Exec exec = Exec::parallel);

// invert_rows + rotate_back.
Recon directional_inverse(const DBPImage& dbp, const ImageGrid& grid, const DirectionalOptions& opt,
                          Exec exec = Exec::parallel);

// Least-squares row offsets for all segments so that the sum of the rotated
// back images is zero on the pixels of zero_region. Updates f in place.
void fit_joint_offsets(std::vector<RotatedInverse>& rots, const Mask& zero_region);

struct BpfOptions {
    FovRule rule = FovRule::detector_bounded;
    OffsetMode mode = OffsetMode::zero_sum;
    double pad_rate = 0.5;
    double support_radius = 0.0;
    Vec2 support_center{};
    bool keep_segments = false;
};

struct BpfResult {
    Image image;
    Mask valid;
    std::vector<Recon> segments;  // filled when keep_segments
    std::vector<DBPImage> dbps;   // filled when keep_segments
};

// Sinograms are matched to the config's segments by angle. Each segment's DBP
// is evaluated on its filtering lines, inverted, rotated back, and the segment
// images are summed in segment order.
BpfResult bpf_reconstruct(const std::vector<Sinogram>& sinos, const MultiScanConfig& config, const ImageGrid& grid,
                          const BpfOptions& opt, Exec exec = Exec::parallel);

}  // namespace lct

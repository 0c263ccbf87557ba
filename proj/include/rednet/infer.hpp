#pragma once

#include <array>

#include "rednet/data.hpp"
#include "rednet/network.hpp"

namespace rednet {

// The 8 symmetries of the pixel grid: rotations by 0/90/180/270 degrees,
// each optionally followed by a horizontal flip. Values encode
// (flip << 2) | rotation_count.
enum class Dihedral : int {
    identity = 0,
    rot90 = 1,
    rot180 = 2,
    rot270 = 3,
    flip = 4,
    flip_rot90 = 5,
    flip_rot180 = 6,
    flip_rot270 = 7,
};

inline constexpr std::array<Dihedral, 8> kAllDihedral = {
    Dihedral::identity,  Dihedral::rot90,      Dihedral::rot180,      Dihedral::rot270,
    Dihedral::flip,      Dihedral::flip_rot90, Dihedral::flip_rot180, Dihedral::flip_rot270,
};

// Pure pixel permutations: no resampling, no arithmetic on values.
ImageGray apply_dihedral(const ImageGray& img, Dihedral d);
Dihedral inverse_dihedral(Dihedral d);

// One forward pass over the whole image, clipped to [0, 1].
ImageGray restore(const Network<float>& net, const ImageGray& img);

// Self-ensemble: run the net on all 8 dihedral variants of the input, map
// each output back, and average. The 8 values for each pixel are summed in
// sorted order (in double) before dividing, which makes the result exactly
// equivariant: restore_ensemble(net, T(img)) == T(restore_ensemble(net, img))
// for every dihedral T, bit for bit. Clipped to [0, 1].
ImageGray restore_ensemble(const Network<float>& net, const ImageGray& img);

}  // namespace rednet

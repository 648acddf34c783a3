#pragma once

#include <cstddef>

#include "cohash/matrix.hpp"

namespace cohash {

/// Reading of the coexistent-similarity loss. DiagL2 treats the diagonal
/// deviations from the target as a vector and takes its L2 norm; TraceAbs
/// takes the absolute value of their sum (the literal trace form). Both have
/// the same minimizer because cosine similarities never exceed 1 while the
/// target is 1.5, so every deviation has the same sign.
enum class CoexistForm { DiagL2, TraceAbs };

/// Which operand of the loss receives gradients. When one side is a constant
/// (e.g. a sign-quantized code matrix), its gradient is forced to zero and is
/// not computed.
enum class GradMask { Both, ImgOnly, TxtOnly };

struct LossParams {
    double lambda1 = 1.0;         // weight of the similarity-alignment loss
    double lambda2 = 1.0;         // weight of the cross-consistency loss
    double coexist_target = 1.5;  // optimization goal for coexistent-pair cosine
    double eps = 1e-12;           // guard inside sqrt for norm gradients
    bool include_coexist = true;  // ablation: drop the coexistent term
    bool include_inter = true;    // ablation: drop the cross-consistency term
    CoexistForm coexist_form = CoexistForm::DiagL2;
    bool squared_norms = false;   // use squared Frobenius norms in the two
                                  // matrix-alignment losses
};

/// The four pairwise cosine-similarity matrices of a batch of relaxed codes:
/// image-image, text-text, image-text, and text-image (= transpose of c_it).
struct SimMatrices {
    MatD c_ii;
    MatD c_tt;
    MatD c_it;
    MatD c_ti;
};

struct LossBreakdown {
    double l_c = 0.0;
    double l_g = 0.0;
    double l_i = 0.0;
    double total = 0.0;  // always l_c + lambda1*l_g + lambda2*l_i
    MatD grad_hi;        // d(total)/d(h_img), zero matrix when masked out
    MatD grad_ht;        // d(total)/d(h_txt), zero matrix when masked out
};

void validate_loss_params(const LossParams& p);

/// Cosine matrices of two equally-shaped code batches. Throws on a zero row:
/// an all-zero relaxed code has no direction and the losses are undefined.
SimMatrices sim_matrices(const MatD& h_img, const MatD& h_txt);

/// Sum over the four similarity matrices of the Frobenius distance to the
/// training similarity s (plain norms by default, squared when configured).
double loss_g(const SimMatrices& mats, const MatD& s, const LossParams& p);

/// Deviation of the cross-modal diagonal (coexistent pairs) from the target,
/// in the configured form.
double loss_c(const MatD& c_it, const LossParams& p);

/// Sum over the 6 unordered pairs of distinct similarity matrices of their
/// Frobenius distances (plain norms by default, squared when configured).
double loss_i(const SimMatrices& mats, const LossParams& p);

/// Full objective with analytic gradients with respect to the unmasked code
/// matrices. Terms disabled by the ablation flags are reported as 0 and
/// contribute nothing to gradients, keeping the total/decomposition identity
/// intact.
LossBreakdown total_loss_and_grads(const MatD& h_img, const MatD& h_txt, const MatD& s,
                                   const LossParams& p, GradMask mask = GradMask::Both);

}  // namespace cohash

"""Bayesian frame-coefficient estimation under bounded-error observations.

Two hybrid MCMC samplers draw frame coefficients and their grouped
generalized-Gaussian hyperparameters from the posterior restricted to
``{x : ||y - F* x||_p <= delta}``; posterior means give hyperparameter
estimates and denoised images.
"""
from .chain import ChainTrace, ConstraintViolationError, SamplerConfig, run_chain
from .frames import (FrameOperator, GroupLayout, MatrixFrame, OrthonormalWavelet,
                     TranslationInvariantWavelet, UnionOfBases, WaveletSpec, analyze,
                     apply_gram_inverse, build_orthonormal_basis, build_tiwt_frame,
                     build_union_frame, project_nullspace, synthesize)
from .lp_ball import (BallConstraint, ball_density, project_to_ball, sample_lp_ball,
                      sample_lp_sphere)
from .model import (HyperParams, Observation, in_constraint, log_posterior, log_prior_x,
                    mh_step_beta, sample_gamma_conditional, sample_gg)
from .gibbs import UnionGibbsSampler, naive_rejection_sample
from .algebraic import AlgebraicMHSampler
from .inference import mmse_estimate, nmse, psrf, psrf_table, snr_db, ssim, wiener_baseline

__version__ = "0.1.0"

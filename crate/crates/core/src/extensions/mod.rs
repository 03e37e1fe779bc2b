pub mod hetero;
pub mod noisy;

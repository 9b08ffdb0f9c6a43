pub mod floquet;
pub mod free_comparison;
pub mod nck;
pub mod projection;
pub mod selftest;
pub mod t1_scaling;
pub mod tj_orders;
pub mod truncation;

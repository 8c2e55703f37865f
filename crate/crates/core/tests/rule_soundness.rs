mod common;

use common::{check_rule, small_rule_case};
use gaugetn::rewrite::RewriteRule;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sound(rule: RewriteRule, seed: u64) -> Result<(), TestCaseError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (net, anchor) = small_rule_case(&mut rng, rule);
    let c = check_rule(&net, rule, anchor);
    prop_assert!(c.applied, "{rule} did not match its own motif");
    prop_assert!(c.deviation <= 1e-10 * c.scale, "{rule}: deviation {:e}", c.deviation);
    Ok(())
}

macro_rules! soundness {
    ($($name:ident => $rule:expr,)*) => {
        proptest! {
            #![proptest_config(ProptestConfig::with_cases(50))]
            $(
                #[test]
                fn $name(seed in any::<u64>()) {
                    sound($rule, seed)?;
                }
            )*
        }
    };
}

soundness! {
    layer_fuse => RewriteRule::LayerFuse,
    copy_fusion => RewriteRule::CopyFusion,
    plus_fusion => RewriteRule::PlusFusion,
    bialgebra => RewriteRule::Bialgebra,
    hopf => RewriteRule::Hopf,
    plus_to_fourier_copy => RewriteRule::PlusToFourierCopy { conjugate: false },
    plus_to_fourier_copy_conj => RewriteRule::PlusToFourierCopy { conjugate: true },
    fourier_cancel => RewriteRule::FourierCancel,
    copy_point => RewriteRule::CopyPoint,
    unit_elim => RewriteRule::UnitElim,
    self_loop_trace => RewriteRule::SelfLoopTrace,
    sub_copy_form => RewriteRule::SubCopyForm,
    sub_copy_fusion => RewriteRule::SubCopyFusion,
}

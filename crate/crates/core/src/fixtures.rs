//! Shared unit-test fixtures.

/// Example sentence tree with the Treebank empty subject under the
/// infinitival clause.
pub(crate) const EXAMPLE_TREEBANK: &str = "(S (NP-SBJ (PRP I)) (VP (VBP want) (S (NP-SBJ (-NONE- *)) \
    (VP (TO to) (VP (VB take) (NP (NP (DT the) (NN flight)) (PP (IN with) \
    (NP (QP (IN at) (JJS most) (CD one)) (NN stop)))))))))";

/// The same sentence without the empty subject node.
pub(crate) const EXAMPLE_PLAIN: &str = "(S (NP (PRP I)) (VP (VBP want) (VP (TO to) (VP (VB take) \
    (NP (NP (DT the) (NN flight)) (PP (IN with) (NP (QP (IN at) (JJS most) (CD one)) (NN stop))))))))";

/// `X0 -> X0 X0 : 0.4`, `X0 -> a : 0.6`.
pub(crate) const G1: &str = "pcfg 1\ntags a\nB 0 0 0 0.4\nL 0 a 0.6\n";

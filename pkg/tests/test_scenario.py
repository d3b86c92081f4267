"""Tests for scenario parsing, rendering, parameters, and templates."""

from __future__ import annotations

import string

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from webmac.errors import (
    MalformedUrl,
    MissingKeyword,
    ScenarioError,
    UnlabeledValue,
    UnsupportedKeyword,
)
from webmac.scenario import (
    Parameter,
    Polarity,
    ScenarioContext,
    classify_polarity,
    extract_parameters,
    fill_template,
    make_template,
    parse_gherkin,
    serialize,
    template_placeholders,
)

ADD_OWNER = (
    "Feature: Add Owner; "
    "Given this is the current URL: http://localhost:8080/owners/new; "
    "When I add a person with first name 'Tom' and last name 'Smith' "
    "as a new pet owner with address '412 Main Street' and city 'New York' "
    "and telephone '6095916230'; "
    "Then the owner named 'Tom Smith' should be created"
)


class TestParse:
    def test_add_owner_fields(self):
        s = parse_gherkin(ADD_OWNER)
        assert s.feature == "Add Owner"
        assert s.given_url == "http://localhost:8080/owners/new"
        assert len(s.when_steps) == 1
        assert s.when_steps[0].startswith("I add a person with first name 'Tom'")
        assert s.then_oracle == "the owner named 'Tom Smith' should be created"
        assert s.polarity is Polarity.POSITIVE

    def test_multiline_form(self):
        text = (
            "Feature: Add Owner\n"
            "Given this is the current URL: http://localhost:8080/owners/new\n"
            "When I add a person with first name 'Tom' and last name 'Smith'\n"
            "And I set the address '412 Main Street'\n"
            "Then the owner should be created\n"
        )
        s = parse_gherkin(text)
        assert s.when_steps == (
            "I add a person with first name 'Tom' and last name 'Smith'",
            "I set the address '412 Main Street'",
        )

    def test_and_after_then_joins_oracle(self):
        text = (
            "Feature: F; Given http://x.test/a; When I press 'Go'; "
            "Then the page loads; And the greeting is shown"
        )
        s = parse_gherkin(text)
        assert s.then_oracle == "the page loads and the greeting is shown"

    def test_backticks_normalized(self):
        text = (
            "Feature: F; Given http://x.test/a; "
            "When I enter the code ``A1''; Then the code is accepted"
        )
        s = parse_gherkin(text)
        assert "code 'A1'" in s.when_steps[0]
        assert "`" not in s.raw

    def test_keyword_inside_quotes_is_text(self):
        text = (
            "Feature: F; Given http://x.test/a; "
            "When I enter the note 'stop; Then resume'; Then the note is saved"
        )
        s = parse_gherkin(text)
        assert s.when_steps == ("I enter the note 'stop; Then resume'",)
        assert s.then_oracle == "the note is saved"

    def test_whitespace_inside_quotes_survives(self):
        text = (
            "Feature: F\nGiven http://x.test/a\n"
            "When I enter the address '412  Main   Street'\nThen it is saved"
        )
        s = parse_gherkin(text)
        assert extract_parameters(s)[0].value == "412  Main   Street"

    @pytest.mark.parametrize("missing,text", [
        ("Feature", "Given http://x.test/; When I click 'Go'; Then done"),
        ("Given", "Feature: F; When I click 'Go'; Then done"),
        ("When", "Feature: F; Given http://x.test/; Then done"),
        ("Then", "Feature: F; Given http://x.test/; When I click 'Go'"),
    ])
    def test_missing_keyword(self, missing, text):
        with pytest.raises(MissingKeyword) as exc:
            parse_gherkin(text)
        assert missing in str(exc.value)

    @pytest.mark.parametrize("text", ["", "   \n  "])
    def test_empty_input(self, text):
        with pytest.raises(MissingKeyword):
            parse_gherkin(text)

    @pytest.mark.parametrize("keyword", ["Scenario", "Background", "Examples"])
    def test_rejected_keywords(self, keyword):
        text = (
            f"Feature: F\n{keyword}: something\n"
            "Given http://x.test/\nWhen I click 'Go'\nThen done"
        )
        with pytest.raises(UnsupportedKeyword) as exc:
            parse_gherkin(text)
        assert keyword in str(exc.value)

    @pytest.mark.parametrize("given", [
        "Given the owners page",
        "Given ftp://files.test/form",
        "Given localhost:8080/owners/new",
    ])
    def test_bad_url(self, given):
        text = f"Feature: F; {given}; When I click 'Go'; Then done"
        with pytest.raises(MalformedUrl):
            parse_gherkin(text)

    def test_leading_junk_rejected(self):
        with pytest.raises(ScenarioError):
            parse_gherkin("hello there\nFeature: F\nGiven http://x.test/\nWhen I click 'Go'\nThen done")


class TestPolarity:
    @pytest.mark.parametrize("oracle,expected", [
        ("the owner named 'Tom Smith' should be created", Polarity.POSITIVE),
        ("register failed", Polarity.NEGATIVE),
        ("the owner should not be created", Polarity.NEGATIVE),
        ("an error message should be displayed", Polarity.NEGATIVE),
        ("the registration is rejected", Polarity.NEGATIVE),
        ("the submission must fail", Polarity.NEGATIVE),
        ("a notice is shown to the user", Polarity.POSITIVE),
        ("the noteworthy entry appears", Polarity.POSITIVE),
    ])
    def test_default_lexicon(self, oracle, expected):
        assert classify_polarity(oracle) is expected

    def test_custom_lexicon(self):
        assert classify_polarity("the request bounced", ["bounced"]) is Polarity.NEGATIVE
        assert classify_polarity("register failed", ["bounced"]) is Polarity.POSITIVE

    def test_case_insensitive(self):
        assert classify_polarity("Registration FAILED") is Polarity.NEGATIVE

    def test_empty_oracle_rejected(self):
        with pytest.raises(ScenarioError):
            classify_polarity("   ")


class TestParameters:
    def test_add_owner_parameters(self):
        s = parse_gherkin(ADD_OWNER)
        params = extract_parameters(s)
        assert [(p.name, p.value) for p in params] == [
            ("first_name", "Tom"),
            ("last_name", "Smith"),
            ("address", "412 Main Street"),
            ("city", "New York"),
            ("telephone", "6095916230"),
        ]

    def test_then_literals_ignored(self):
        s = parse_gherkin(ADD_OWNER)
        names = [p.name for p in extract_parameters(s)]
        assert "owner_named" not in names
        assert len(names) == 5

    def test_registration_form_labels(self):
        text = (
            "Feature: Register; Given http://bank.test/register; "
            "When they entered the Username 'abc', the Password '123456@Mm', "
            "Telephone '123456789', Initial Balance '10', and then clicked 'Register'; "
            "Then the account should be created"
        )
        params = extract_parameters(parse_gherkin(text))
        assert [p.name for p in params] == [
            "username", "password", "telephone", "initial_balance", "clicked",
        ]
        assert params[1].value == "123456@Mm"

    def test_duplicate_labels_get_suffixes(self):
        text = (
            "Feature: F; Given http://x.test/; "
            "When I enter the code 'a' and the code 'b'; Then done ok"
        )
        params = extract_parameters(parse_gherkin(text))
        assert [p.name for p in params] == ["code", "code_2"]

    def test_double_quoted_value(self):
        text = (
            'Feature: F; Given http://x.test/; '
            'When I enter the last name "O\'Connor"; Then it is saved'
        )
        params = extract_parameters(parse_gherkin(text))
        assert params == [Parameter("last_name", "O'Connor")]

    def test_empty_value(self):
        text = (
            "Feature: F; Given http://x.test/; "
            "When I enter the address ''; Then the address is rejected"
        )
        params = extract_parameters(parse_gherkin(text))
        assert params == [Parameter("address", "")]

    def test_unlabeled_value(self):
        text = "Feature: F; Given http://x.test/; When 'Tom' is entered; Then done ok"
        with pytest.raises(UnlabeledValue):
            extract_parameters(parse_gherkin(text))

    def test_possessive_apostrophe_is_not_a_quote(self):
        text = (
            "Feature: F; Given http://x.test/; "
            "When I fill the user's city 'New York'; Then the city is saved"
        )
        params = extract_parameters(parse_gherkin(text))
        assert params == [Parameter("city", "New York")]


class TestTemplate:
    def test_add_owner_template(self):
        s = parse_gherkin(ADD_OWNER)
        params = extract_parameters(s)
        template = make_template(s, params)
        assert "'{first_name}'" in template
        assert "'{telephone}'" in template
        assert "'Tom Smith'" in template  # Then-clause literal untouched
        assert template_placeholders(template) == [p.name for p in params]

    def test_back_substitution_is_identity(self):
        s = parse_gherkin(ADD_OWNER)
        params = extract_parameters(s)
        template = make_template(s, params)
        filled = fill_template(template, {p.name: p.value for p in params})
        assert filled == s.raw

    def test_duplicate_values_replaced_positionally(self):
        text = (
            "Feature: F; Given http://x.test/; "
            "When I set the width '10' and the height '10'; Then the shape is drawn"
        )
        s = parse_gherkin(text)
        params = extract_parameters(s)
        template = make_template(s, params)
        assert "width '{width}'" in template
        assert "height '{height}'" in template
        filled = fill_template(template, {"width": "10", "height": "25"})
        assert "width '10'" in filled
        assert "height '25'" in filled

    def test_fill_switches_quote_style(self):
        out = fill_template("the last name '{last_name}'", {"last_name": "O'Connor"})
        assert out == 'the last name "O\'Connor"'

    def test_fill_rejects_value_with_both_quotes(self):
        with pytest.raises(ValueError):
            fill_template("name '{n}'", {"n": "a'b\"c"})

    def test_fill_missing_value(self):
        with pytest.raises(KeyError):
            fill_template("name '{n}'", {})

    def test_misaligned_params_rejected(self):
        s = parse_gherkin(ADD_OWNER)
        with pytest.raises(ScenarioError):
            make_template(s, [Parameter("first_name", "Bob")])


class TestSerialize:
    def test_round_trip_equality(self):
        s = parse_gherkin(ADD_OWNER)
        again = parse_gherkin(serialize(s))
        assert again == s

    def test_canonical_shape(self):
        s = parse_gherkin(ADD_OWNER)
        lines = serialize(s).splitlines()
        assert lines[0] == "Feature: Add Owner"
        assert lines[1].startswith("Given this is the current URL: http://")
        assert lines[2].startswith("When ")
        assert lines[-1].startswith("Then ")


class TestContext:
    def test_context_round_trip(self):
        s = parse_gherkin(ADD_OWNER)
        params = tuple(extract_parameters(s))
        ctx = ScenarioContext(
            scenario=s,
            parameter_list=params,
            is_effective=True,
            scenario_template=make_template(s, params),
            transcript_ref="t-1",
        )
        data = ctx.to_dict()
        assert set(data) == {
            "scenario", "parameter_list", "is_effective",
            "scenario_template", "transcript_ref",
        }
        again = ScenarioContext.from_dict(data)
        assert again.scenario == s
        assert again.parameter_list == params
        assert again.scenario_template == ctx.scenario_template
        assert again.is_effective is True


_LABELS = [
    "first name", "last name", "address", "city", "telephone",
    "username", "password", "amount", "postcode",
]
_POSITIVE_ORACLES = [
    "the owner should be created",
    "the account is created successfully",
]
_NEGATIVE_ORACLES = [
    "the registration failed",
    "an error message should be displayed",
    "the owner should not be created",
]
_VALUE_ALPHABET = string.ascii_letters + string.digits + " @#$%&-._,;:"


@st.composite
def scenario_texts(draw):
    labels = draw(
        st.lists(st.sampled_from(_LABELS), min_size=1, max_size=5, unique=True)
    )
    pieces = []
    for label in labels:
        value = draw(st.text(alphabet=_VALUE_ALPHABET, max_size=18))
        quote = draw(st.sampled_from(["'", '"']))
        pieces.append(f"{label} {quote}{value}{quote}")
    step = "I register with " + " and ".join(pieces)
    negative = draw(st.booleans())
    oracle = draw(
        st.sampled_from(_NEGATIVE_ORACLES if negative else _POSITIVE_ORACLES)
    )
    sep = draw(st.sampled_from(["; ", "\n"]))
    text = sep.join([
        "Feature: Register",
        "Given this is the current URL: http://fixture.test/form",
        f"When {step}",
        f"Then {oracle}",
    ])
    return text, len(labels), negative


@settings(max_examples=80)
@given(scenario_texts())
def test_parse_serialize_round_trip(case):
    text, n_params, negative = case
    s = parse_gherkin(text)
    assert len(extract_parameters(s)) == n_params
    assert (s.polarity is Polarity.NEGATIVE) == negative
    again = parse_gherkin(serialize(s))
    assert again == s
    assert serialize(again) == serialize(s)


@settings(max_examples=80)
@given(scenario_texts())
def test_template_back_substitution(case):
    text, _, _ = case
    s = parse_gherkin(text)
    params = extract_parameters(s)
    template = make_template(s, params)
    assert template_placeholders(template) == [p.name for p in params]
    filled = fill_template(template, {p.name: p.value for p in params})
    assert filled == s.raw

@Test
public void testParseDocumentTriggersParse() {
    String xml = "<?xml version=\"1.0\"?><!DOCTYPE r [<!ENTITY x SYSTEM \"file:///etc/passwd\">]><r>&x;</r>";
    MethodCallInterceptor.interceptor("org.dom4j.DocumentHelper", "parseText", new Object[]{xml});
    MethodCallInterceptor.condition("contains", "<!ENTITY");
    try {
        DocumentService.parseDocument(xml, "UTF-8");
    } catch (Exception e) {
        // entity resolution failures are tolerated
    }
    assertTrue(MethodCallInterceptor.isTriggered());
    assertTrue(MethodCallInterceptor.isConditionMet());
}
